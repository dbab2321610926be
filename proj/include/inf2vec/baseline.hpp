#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "inf2vec/core.hpp"
#include "inf2vec/events.hpp"

namespace inf2vec {

// History-free reference model: type marginals plus a single exponential
// inter-arrival law (the homogeneous-Poisson next-event distribution).
// Its per-event NLL, -log P(k_i) - log Exp(tau_i; rate), lives on the same
// scale as the density decoder's NLL, so the two are directly comparable.
class FrequencyBaseline {
 public:
  void fit(const Dataset& train) {
    require(train.num_types > 0, "baseline: dataset has no types");
    require(train.total_events() > 0, "baseline: cannot fit on zero events");
    type_probs_.assign(static_cast<size_t>(train.num_types), 0.0);
    double total_tau = 0.0;
    size_t n = 0;
    for (const auto& seq : train.sequences) {
      double prev = 0.0;
      for (const auto& e : seq.events) {
        type_probs_[static_cast<size_t>(e.type_id)] += 1.0;
        total_tau += e.time - prev;
        prev = e.time;
        ++n;
      }
    }
    // Laplace-smoothed marginals keep never-seen types off -inf log-probs.
    for (auto& p : type_probs_) p = (p + 1.0) / (static_cast<double>(n) + type_probs_.size());
    mean_tau_ = std::max(total_tau / static_cast<double>(n), 1e-12);
    fitted_ = true;
  }

  int predict_type() const {
    require(fitted_, "baseline: fit() first");
    return static_cast<int>(std::max_element(type_probs_.begin(), type_probs_.end()) -
                            type_probs_.begin());
  }

  double predict_tau() const {
    require(fitted_, "baseline: fit() first");
    return mean_tau_;
  }

  // mean per-event NLL over the dataset
  double evaluate_nll(const Dataset& data) const {
    require(fitted_, "baseline: fit() first");
    require(data.total_events() > 0, "baseline: no events to evaluate");
    double rate = 1.0 / mean_tau_;
    double nll = 0.0;
    for (const auto& seq : data.sequences) {
      double prev = 0.0;
      for (const auto& e : seq.events) {
        double tau = e.time - prev;
        nll -= std::log(type_probs_[static_cast<size_t>(e.type_id)]);
        nll -= std::log(rate) - rate * tau;
        prev = e.time;
      }
    }
    return nll / static_cast<double>(data.total_events());
  }

  const std::vector<double>& type_probs() const { return type_probs_; }

 private:
  std::vector<double> type_probs_;
  double mean_tau_ = 0.0;
  bool fitted_ = false;
};

}  // namespace inf2vec
