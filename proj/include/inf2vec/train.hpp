#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "inf2vec/core.hpp"
#include "inf2vec/events.hpp"
#include "inf2vec/model.hpp"
#include "inf2vec/optim.hpp"
#include "inf2vec/rng.hpp"

namespace inf2vec {

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 32;
  int max_epochs = 200;
  int patience = 10;
  double grad_clip_norm = 5.0;
  uint64_t seed = 0;

  void validate() const {
    require(lr >= 0.0, "train config: lr must be >= 0");
    require(batch_size >= 1, "train config: batch_size must be >= 1");
    require(max_epochs >= 1, "train config: max_epochs must be >= 1");
    require(patience >= 1 && patience <= max_epochs,
            "train config: patience must be in [1, max_epochs]");
    require(grad_clip_norm > 0.0, "train config: grad_clip_norm must be > 0");
  }
};

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return nlohmann::json{{"lr", c.lr},
                        {"batch_size", c.batch_size},
                        {"max_epochs", c.max_epochs},
                        {"patience", c.patience},
                        {"grad_clip_norm", c.grad_clip_norm},
                        {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.lr = j.value("lr", c.lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.grad_clip_norm = j.value("grad_clip_norm", c.grad_clip_norm);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw error(cat("bad train config: ", e.what()));
  }
  c.validate();
  return c;
}

struct Checkpoint {
  ModelConfig config;
  int epoch = 0;
  std::vector<std::pair<std::string, Tensor<Real>>> tensors;

  static Checkpoint from_model(const Inf2vecModel& model, int epoch) {
    Checkpoint c;
    c.config = model.config();
    c.epoch = epoch;
    for (const auto& p : model.params()) c.tensors.emplace_back(p.name, p.value);
    return c;
  }
};

inline Inf2vecModel make_model(const Checkpoint& ckpt) {
  Inf2vecModel model(ckpt.config, 0);
  require(ckpt.tensors.size() == model.params().size(),
          cat("checkpoint holds ", ckpt.tensors.size(), " tensors, model expects ",
              model.params().size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    Parameter<Real>& p = model.param(name);
    require(p.value.same_shape(tensor),
            cat("checkpoint shape mismatch for '", name, "': ", tensor.shape_str(),
                " vs ", p.value.shape_str()));
    p.value = tensor;
  }
  return model;
}

namespace detail {

constexpr const char* kDtypeName = sizeof(Real) == 8 ? "f64" : "f32";

inline void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline uint64_t read_u64(std::istream& in, const char* what) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  require(in.gcount() == 8, cat("checkpoint truncated while reading ", what));
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void write_reals_le(std::ostream& out, const Real* data, int64_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), n * static_cast<int64_t>(sizeof(Real)));
  } else {
    for (int64_t i = 0; i < n; ++i) {
      unsigned char b[sizeof(Real)];
      std::memcpy(b, &data[i], sizeof(Real));
      for (size_t j = 0; j < sizeof(Real) / 2; ++j)
        std::swap(b[j], b[sizeof(Real) - 1 - j]);
      out.write(reinterpret_cast<const char*>(b), sizeof(Real));
    }
  }
}

inline void read_reals_le(std::istream& in, Real* data, int64_t n) {
  in.read(reinterpret_cast<char*>(data), n * static_cast<int64_t>(sizeof(Real)));
  require(in.gcount() == n * static_cast<int64_t>(sizeof(Real)),
          "payload length mismatch");
  if constexpr (std::endian::native != std::endian::little) {
    for (int64_t i = 0; i < n; ++i) {
      unsigned char b[sizeof(Real)];
      std::memcpy(b, &data[i], sizeof(Real));
      for (size_t j = 0; j < sizeof(Real) / 2; ++j)
        std::swap(b[j], b[sizeof(Real) - 1 - j]);
      std::memcpy(&data[i], b, sizeof(Real));
    }
  }
}

}  // namespace detail

// Container layout: [u64 manifest length][manifest JSON]
//                   [u64 payload length][little-endian raw values].
inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json manifest;
  manifest["format"] = "inf2vec-checkpoint";
  manifest["version"] = 1;
  manifest["epoch"] = ckpt.epoch;
  manifest["model_config"] = config_to_json(ckpt.config);
  nlohmann::json params = nlohmann::json::array();
  int64_t payload = 0;
  for (const auto& [name, tensor] : ckpt.tensors) {
    params.push_back({{"name", name}, {"shape", tensor.shape()}, {"dtype", detail::kDtypeName}});
    payload += tensor.numel() * static_cast<int64_t>(sizeof(Real));
  }
  manifest["params"] = params;
  std::string mtext = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  require(out.good(), cat("cannot write checkpoint '", path, "'"));
  detail::write_u64(out, mtext.size());
  out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  detail::write_u64(out, static_cast<uint64_t>(payload));
  for (const auto& [name, tensor] : ckpt.tensors)
    detail::write_reals_le(out, tensor.data(), tensor.numel());
  require(out.good(), cat("write failed for checkpoint '", path, "'"));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), cat("cannot open checkpoint '", path, "'"));
  uint64_t mlen = detail::read_u64(in, "manifest length");
  std::string mtext(mlen, '\0');
  in.read(mtext.data(), static_cast<std::streamsize>(mlen));
  require(in.gcount() == static_cast<std::streamsize>(mlen),
          "checkpoint truncated while reading manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mtext);
  } catch (const nlohmann::json::exception& e) {
    throw error(cat("corrupt checkpoint manifest: ", e.what()));
  }
  require(manifest.value("format", std::string()) == "inf2vec-checkpoint",
          "corrupt checkpoint manifest: wrong format tag");
  require(manifest.value("version", 0) == 1, "unsupported checkpoint version");

  Checkpoint ckpt;
  ckpt.config = config_from_json(manifest.at("model_config"));
  ckpt.epoch = manifest.value("epoch", 0);

  uint64_t payload = detail::read_u64(in, "payload length");
  int64_t expected = 0;
  std::vector<std::pair<std::string, std::vector<int>>> entries;
  for (const auto& pj : manifest.at("params")) {
    std::string name = pj.at("name").get<std::string>();
    std::string dtype = pj.at("dtype").get<std::string>();
    require(dtype == detail::kDtypeName,
            cat("dtype mismatch for '", name, "': file has ", dtype,
                ", this build expects ", detail::kDtypeName));
    std::vector<int> shape = pj.at("shape").get<std::vector<int>>();
    expected += Tensor<Real>::checked_numel(shape) * static_cast<int64_t>(sizeof(Real));
    entries.emplace_back(std::move(name), std::move(shape));
  }
  require(static_cast<int64_t>(payload) == expected, "payload length mismatch");

  for (auto& [name, shape] : entries) {
    Tensor<Real> t(shape);
    detail::read_reals_le(in, t.data(), t.numel());
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  // must now be at EOF
  char extra;
  in.read(&extra, 1);
  require(in.gcount() == 0, "payload length mismatch");
  return ckpt;
}

// Mean per-event NLL: total sequence NLL divided by total event count, so
// every event weighs the same regardless of its sequence's length.
inline double evaluate_nll(Inf2vecModel& model, const Dataset& data) {
  require(model.config().K == data.num_types,
          cat("incompatible model: checkpoint has K=", model.config().K,
              " but dataset has K=", data.num_types, " event types"));
  size_t events = data.total_events();
  require(events > 0, "evaluate_nll: dataset has no events");
  double total = 0.0;
  for (const auto& seq : data.sequences) total += model.sequence_nll(seq);
  return total / static_cast<double>(events);
}

struct EpochStats {
  int epoch = 0;
  double train_nll = 0.0;
  double valid_nll = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_valid_nll = std::numeric_limits<double>::infinity();
};

inline void save_history_csv(const std::vector<EpochStats>& history,
                             const std::string& path) {
  std::ofstream out(path);
  require(out.good(), cat("cannot write history file '", path, "'"));
  out << "epoch,train_nll,valid_nll\n";
  char line[128];
  for (const auto& h : history) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g\n", h.epoch, h.train_nll,
                  h.valid_nll);
    out << line;
  }
}

// Maximum-likelihood training: Adam on mean per-event NLL, per-epoch seeded
// shuffling, early stopping on validation NLL, best checkpoint retained.
inline TrainResult train(const ModelConfig& mcfg, const Dataset& train_data,
                         const Dataset& valid_data, const TrainConfig& tcfg) {
  mcfg.validate();
  tcfg.validate();
  require(!train_data.sequences.empty() && !valid_data.sequences.empty(),
          "train: datasets must be nonempty");
  require(mcfg.K == train_data.num_types && mcfg.K == valid_data.num_types,
          cat("train: model K=", mcfg.K, " does not match data K=",
              train_data.num_types));
  require(train_data.total_events() > 0, "train: no events in training data");

  Inf2vecModel model(mcfg, tcfg.seed);
  AdamState<Real> adam = AdamState<Real>::for_params(model.params());

  TrainResult result;
  int stall = 0;
  int n = static_cast<int>(train_data.sequences.size());

  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    Rng shuffler(tcfg.seed, static_cast<uint64_t>(epoch));
    std::vector<int> perm = shuffler.permutation(n);

    double epoch_nll = 0.0;
    size_t epoch_events = 0;
    for (int start = 0; start < n; start += tcfg.batch_size) {
      int stop = std::min(n, start + tcfg.batch_size);
      model.params().zero_grad();
      double batch_nll = 0.0;
      size_t batch_events = 0;
      for (int i = start; i < stop; ++i) {
        const EventSequence& seq = train_data.sequences[static_cast<size_t>(perm[i])];
        try {
          Graph<Real> g;
          Var<Real> loss = model.sequence_nll_graph(g, seq);
          double lv = g.scalar_value(loss);
          require(std::isfinite(lv), "non-finite loss");
          g.backward(loss);
          batch_nll += lv;
          batch_events += seq.events.size();
        } catch (const error& e) {
          throw error(cat("divergence at epoch ", epoch, ", step ",
                          start / tcfg.batch_size + 1, " (seq ", seq.seq_id,
                          "): ", e.what()));
        }
      }
      if (batch_events > 0 && tcfg.lr > 0.0) {
        double inv = 1.0 / static_cast<double>(batch_events);
        for (auto& p : model.params())
          for (int64_t j = 0; j < p.grad.numel(); ++j) p.grad[j] *= static_cast<Real>(inv);
        clip_gradients(model.params(), tcfg.grad_clip_norm);
        adam_step(model.params(), adam, tcfg.lr);
      }
      epoch_nll += batch_nll;
      epoch_events += batch_events;
    }

    double train_nll = epoch_events > 0 ? epoch_nll / static_cast<double>(epoch_events)
                                        : 0.0;
    double valid_nll = evaluate_nll(model, valid_data);
    result.history.push_back(EpochStats{epoch, train_nll, valid_nll});

    if (valid_nll < result.best_valid_nll) {
      result.best_valid_nll = valid_nll;
      result.best_epoch = epoch;
      result.best = Checkpoint::from_model(model, epoch);
      stall = 0;
    } else if (++stall >= tcfg.patience) {
      break;
    }
  }
  require(result.best_epoch > 0, "train: no epoch produced a finite validation NLL");
  return result;
}

}  // namespace inf2vec
