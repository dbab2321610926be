#pragma once

// Umbrella header for the inf2vec toolkit: event containers, a Hawkes
// simulator, the reverse-mode tape, the local-embedding event sequence
// model, training, and influence evaluation.

#include "inf2vec/baseline.hpp"
#include "inf2vec/core.hpp"
#include "inf2vec/events.hpp"
#include "inf2vec/graph.hpp"
#include "inf2vec/hawkes.hpp"
#include "inf2vec/metrics.hpp"
#include "inf2vec/model.hpp"
#include "inf2vec/optim.hpp"
#include "inf2vec/rng.hpp"
#include "inf2vec/tensor.hpp"
#include "inf2vec/train.hpp"
