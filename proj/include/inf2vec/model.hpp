#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "inf2vec/core.hpp"
#include "inf2vec/events.hpp"
#include "inf2vec/graph.hpp"
#include "inf2vec/rng.hpp"
#include "inf2vec/tensor.hpp"

namespace inf2vec {

enum class Mode { local, global };
enum class DecoderKind { density, intensity };

inline std::string to_string(Mode m) { return m == Mode::local ? "local" : "global"; }
inline std::string to_string(DecoderKind d) {
  return d == DecoderKind::density ? "density" : "intensity";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "local") return Mode::local;
  if (s == "global") return Mode::global;
  throw error(cat("unknown mode '", s, "' (expected local or global)"));
}

inline DecoderKind parse_decoder(const std::string& s) {
  if (s == "density") return DecoderKind::density;
  if (s == "intensity") return DecoderKind::intensity;
  throw error(cat("unknown decoder '", s, "' (expected density or intensity)"));
}

struct ModelConfig {
  int K = 0;
  int d_type = 16;   // type-embedding width
  int d_time = 8;    // temporal-embedding width
  int d_hidden = 32; // recurrent state width
  int M = 8;         // mixture components of the density decoder
  Mode mode = Mode::local;
  DecoderKind decoder = DecoderKind::density;
  int quad_points = 32;  // trapezoid resolution for the intensity compensator

  int context_count() const { return mode == Mode::local ? K : 1; }
  int embed_dim() const { return d_type + d_time; }

  void validate() const {
    require(K >= 1, "model config: K must be >= 1");
    require(d_type >= 1 && d_time >= 1 && d_hidden >= 1,
            "model config: embedding and hidden dims must be >= 1");
    require(M >= 1, "model config: M must be >= 1");
    require(quad_points >= 1, "model config: quad_points must be >= 1");
  }

  bool operator==(const ModelConfig& o) const = default;
};

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"K", c.K},
                        {"d_type", c.d_type},
                        {"d_time", c.d_time},
                        {"d_hidden", c.d_hidden},
                        {"M", c.M},
                        {"mode", to_string(c.mode)},
                        {"decoder", to_string(c.decoder)},
                        {"quad_points", c.quad_points}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.K = j.at("K").get<int>();
    c.d_type = j.value("d_type", c.d_type);
    c.d_time = j.value("d_time", c.d_time);
    c.d_hidden = j.value("d_hidden", c.d_hidden);
    c.M = j.value("M", c.M);
    c.mode = parse_mode(j.value("mode", std::string("local")));
    c.decoder = parse_decoder(j.value("decoder", std::string("density")));
    c.quad_points = j.value("quad_points", c.quad_points);
  } catch (const nlohmann::json::exception& e) {
    throw error(cat("bad model config: ", e.what()));
  }
  c.validate();
  return c;
}

inline double log_normal_pdf(double tau, double mu, double sigma) {
  if (tau <= 0.0) return 0.0;
  double z = (std::log(tau) - mu) / sigma;
  return std::exp(-0.5 * z * z) / (tau * sigma * std::sqrt(2.0 * kPi));
}

// Distribution of the next event given an encoded history: a categorical
// over types and, per type, a log-normal mixture over the inter-arrival
// (density decoder) or an evaluable intensity curve (intensity decoder).
struct NextEventDistribution {
  std::vector<double> type_probs;                     // K
  std::vector<std::vector<double>> pi, mu, sigma;     // K x M
  std::function<std::vector<double>(double)> intensity;

  double mixture_pdf(double tau, int k) const {
    double acc = 0.0;
    for (size_t m = 0; m < pi[static_cast<size_t>(k)].size(); ++m)
      acc += pi[static_cast<size_t>(k)][m] *
             log_normal_pdf(tau, mu[static_cast<size_t>(k)][m],
                            sigma[static_cast<size_t>(k)][m]);
    return acc;
  }

  // joint density p(tau, k)
  double density(double tau, int k) const {
    return type_probs[static_cast<size_t>(k)] * mixture_pdf(tau, k);
  }
};

// Expected-time readout: probability-weighted sum of per-type mixture
// medians, exp(mu) being the median of each log-normal component.
inline double predicted_tau(const NextEventDistribution& d) {
  double acc = 0.0;
  for (size_t k = 0; k < d.type_probs.size(); ++k) {
    double med = 0.0;
    for (size_t m = 0; m < d.pi[k].size(); ++m)
      med += d.pi[k][m] * std::exp(d.mu[k][m]);
    acc += d.type_probs[k] * med;
  }
  return acc;
}

// History summaries: one d_hidden row per context type (local mode) or a
// single row (global mode).
using HistoryEncodings = Tensor<Real>;

class Inf2vecModel {
 public:
  using T = Tensor<Real>;
  using V = Var<Real>;
  using G = Graph<Real>;

  Inf2vecModel(ModelConfig cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed, 0x10f2'0ec5);
    init_params(rng);
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<Real>& params() { return params_; }
  const ParamStore<Real>& params() const { return params_; }

  Parameter<Real>& param(const std::string& name) {
    for (auto& p : params_)
      if (p.name == name) return p;
    throw error(cat("no parameter named '", name, "'"));
  }

  // Zeroes every weight; used by tests that pin closed-form behaviour.
  void zero_all_params() {
    for (auto& p : params_)
      std::fill(p.value.data(), p.value.data() + p.value.numel(), Real(0));
  }

  // ---- graph construction ----

  struct Bound {
    V table, table_flat;  // table_flat: (K*K, d_type) view in local mode
    V time_w, time_b;
    V gru_wz, gru_wr, gru_wh, gru_uz, gru_ur, gru_uh, gru_bz, gru_br, gru_bh;
    V type_w, type_b;
    V pi_w_flat, pi_b, mu_w_flat, mu_b, sg_w_flat, sg_b;  // (K, d_hidden*M) views
    V mlp1_w, mlp1_b, mlp2_w, mlp2_b;
  };

  Bound bind(G& g) {
    Bound b;
    b.table = g.param(params_[ids_.table]);
    if (cfg_.mode == Mode::local)
      b.table_flat = reshape(b.table, {cfg_.K * cfg_.K, cfg_.d_type});
    else
      b.table_flat = b.table;
    b.time_w = g.param(params_[ids_.time_w]);
    b.time_b = g.param(params_[ids_.time_b]);
    b.gru_wz = g.param(params_[ids_.gru_wz]);
    b.gru_wr = g.param(params_[ids_.gru_wr]);
    b.gru_wh = g.param(params_[ids_.gru_wh]);
    b.gru_uz = g.param(params_[ids_.gru_uz]);
    b.gru_ur = g.param(params_[ids_.gru_ur]);
    b.gru_uh = g.param(params_[ids_.gru_uh]);
    b.gru_bz = g.param(params_[ids_.gru_bz]);
    b.gru_br = g.param(params_[ids_.gru_br]);
    b.gru_bh = g.param(params_[ids_.gru_bh]);
    if (cfg_.decoder == DecoderKind::density) {
      b.type_w = g.param(params_[ids_.type_w]);
      b.type_b = g.param(params_[ids_.type_b]);
      int dm = cfg_.d_hidden * cfg_.M;
      b.pi_w_flat = reshape(g.param(params_[ids_.pi_w]), {cfg_.K, dm});
      b.mu_w_flat = reshape(g.param(params_[ids_.mu_w]), {cfg_.K, dm});
      b.sg_w_flat = reshape(g.param(params_[ids_.sg_w]), {cfg_.K, dm});
      b.pi_b = g.param(params_[ids_.pi_b]);
      b.mu_b = g.param(params_[ids_.mu_b]);
      b.sg_b = g.param(params_[ids_.sg_b]);
    } else {
      b.mlp1_w = g.param(params_[ids_.mlp1_w]);
      b.mlp1_b = g.param(params_[ids_.mlp1_b]);
      b.mlp2_w = g.param(params_[ids_.mlp2_w]);
      b.mlp2_b = g.param(params_[ids_.mlp2_b]);
    }
    return b;
  }

  V initial_state(G& g) const {
    return g.constant(T({cfg_.context_count(), cfg_.d_hidden}));
  }

  // Event embedding for every context at once: type embedding looked up in
  // each context's table, concatenated with tanh(w * log1p(dt) + b).
  V embed_step(const Bound& b, int k_i, double dt) const {
    require(k_i >= 0 && k_i < cfg_.K, cat("embed: type ", k_i, " out of range"));
    require(dt >= 0.0, "embed: inter-arrival must be >= 0");
    V type_part;
    if (cfg_.mode == Mode::local) {
      std::vector<int> idx(static_cast<size_t>(cfg_.K));
      for (int c = 0; c < cfg_.K; ++c) idx[static_cast<size_t>(c)] = c * cfg_.K + k_i;
      type_part = gather_rows(b.table_flat, std::move(idx));
    } else {
      type_part = gather_rows(b.table_flat, {k_i});
    }
    double u = std::log1p(dt);
    V time_part = tanh(add(scale(b.time_w, u), b.time_b));
    return concat_cols(type_part, time_part);
  }

  // One shared GRU advanced for all contexts in a single batched step.
  V gru_step(const Bound& b, V e, V h) const {
    int c = cfg_.context_count();
    V z = sigmoid(add(add(matmul(e, b.gru_wz), matmul(h, b.gru_uz)),
                      broadcast_rows(b.gru_bz, c)));
    V r = sigmoid(add(add(matmul(e, b.gru_wr), matmul(h, b.gru_ur)),
                      broadcast_rows(b.gru_br, c)));
    V cand = tanh(add(add(matmul(e, b.gru_wh), matmul(mul(r, h), b.gru_uh)),
                      broadcast_rows(b.gru_bh, c)));
    V keep = add_const(neg(z), 1.0);
    return add(mul(keep, h), mul(z, cand));
  }

  // Type scores: in local mode every type reads its own encoding row, in
  // global mode all types read the single shared encoding.
  V type_logits(const Bound& b, V h) const {
    if (cfg_.mode == Mode::local)
      return add(row_sum(mul(b.type_w, h)), b.type_b);
    return add(matmul(b.type_w, reshape(h, {cfg_.d_hidden, 1})), b.type_b);
  }

  struct MixtureVars {
    V log_pi, mu, sigma;  // each (1 x M)
  };

  MixtureVars mixture_for_type(const Bound& b, V h, int k) const {
    V hk = cfg_.mode == Mode::local ? slice_rows(h, k, k + 1) : h;
    auto head = [&](V w_flat, V bias) {
      V w = reshape(gather_rows(w_flat, {k}), {cfg_.d_hidden, cfg_.M});
      return add(matmul(hk, w), gather_rows(bias, {k}));
    };
    MixtureVars m;
    V raw_pi = head(b.pi_w_flat, b.pi_b);
    m.log_pi = sub(raw_pi, logsumexp(raw_pi));
    m.mu = head(b.mu_w_flat, b.mu_b);
    m.sigma = add_const(softplus(head(b.sg_w_flat, b.sg_b)), kSigmaFloor);
    return m;
  }

  // log sum_m pi_m LogNormal(tau; mu_m, sigma_m), stable in log space.
  V log_mixture_pdf(const MixtureVars& m, double tau) const {
    double lt = std::log(std::max(tau, kTauFloor));
    V diff = add_const(neg(m.mu), lt);  // lt - mu
    V quad = div(mul(diff, diff), scale(mul(m.sigma, m.sigma), 2.0));
    V logn = add_const(neg(add(quad, log(m.sigma))), -lt - 0.5 * kLogTwoPi);
    return logsumexp(add(m.log_pi, logn));
  }

  // Intensities of all K types at an elapsed time since the last event:
  // lambda_k = softplus(MLP_k([h_k ; t, log1p(t)])).
  V intensity_vec(G& g, const Bound& b, V h, double t_elapsed) const {
    require(t_elapsed >= 0.0, "intensity: elapsed time must be >= 0");
    V hk = cfg_.mode == Mode::local ? h : broadcast_rows(h, cfg_.K);
    V phi = g.constant(T::row({static_cast<Real>(t_elapsed),
                               static_cast<Real>(std::log1p(t_elapsed))}));
    V x = concat_cols(hk, broadcast_rows(phi, cfg_.K));
    V hid = tanh(add(rowwise_matmul(x, b.mlp1_w), b.mlp1_b));
    V s = add(row_sum(mul(hid, b.mlp2_w)), b.mlp2_b);
    return softplus(s);  // (K x 1)
  }

  // Negative log-likelihood of one sequence, built on the tape so it can be
  // trained end-to-end. Density decoder: -sum_i [log P(k_i) + log p_{k_i}(tau_i)].
  // Intensity decoder: -sum_i log lambda_{k_i}(t_i) plus the trapezoid
  // compensator over every inter-event interval and the tail to the horizon.
  V sequence_nll_graph(G& g, const EventSequence& seq) {
    validate_sequence(seq, cfg_.K);
    Bound b = bind(g);
    V h = initial_state(g);
    V total = g.scalar(0.0);
    double prev_t = 0.0;
    for (const Event& ev : seq.events) {
      double tau = ev.time - prev_t;
      if (cfg_.decoder == DecoderKind::density) {
        V s = type_logits(b, h);
        V log_p_type = sub(slice_rows(s, ev.type_id, ev.type_id + 1), logsumexp(s));
        MixtureVars m = mixture_for_type(b, h, ev.type_id);
        V log_p_tau = log_mixture_pdf(m, tau);
        total = sub(total, add(log_p_type, log_p_tau));
      } else {
        V lam_end = intensity_vec(g, b, h, tau);
        total = sub(total, log(slice_rows(lam_end, ev.type_id, ev.type_id + 1)));
        total = add(total, compensator(g, b, h, tau, lam_end));
      }
      h = gru_step(b, embed_step(b, ev.type_id, tau), h);
      prev_t = ev.time;
    }
    if (cfg_.decoder == DecoderKind::intensity && seq.horizon > prev_t)
      total = add(total, compensator(g, b, h, seq.horizon - prev_t, V{}));
    return total;
  }

  double sequence_nll(const EventSequence& seq) {
    G g;
    return g.scalar_value(sequence_nll_graph(g, seq));
  }

  // ---- eager views ----

  HistoryEncodings encode_history(const std::vector<Event>& prefix) {
    G g;
    return g.value(encode_prefix(g, bind(g), prefix));
  }

  // Event embedding within one context space; matches one row of embed_step.
  T embed_event(int k_context, int k_i, double dt) {
    require(k_context >= 0 && k_context < cfg_.K,
            cat("embed: context ", k_context, " out of range"));
    G g;
    Bound b = bind(g);
    V e = embed_step(b, k_i, dt);
    int row = cfg_.mode == Mode::local ? k_context : 0;
    const T& ev = g.value(e);
    T out({cfg_.embed_dim()});
    for (int j = 0; j < cfg_.embed_dim(); ++j) out[j] = ev.at(row, j);
    return out;
  }

  NextEventDistribution next_distribution(const std::vector<Event>& prefix) {
    NextEventDistribution dist;
    if (cfg_.decoder == DecoderKind::intensity) {
      HistoryEncodings h = encode_history(prefix);
      dist.intensity = [this, h](double t_elapsed) {
        G g;
        Bound b = bind(g);
        const T& lam = g.value(intensity_vec(g, b, g.constant(h), t_elapsed));
        std::vector<double> out(static_cast<size_t>(cfg_.K));
        for (int k = 0; k < cfg_.K; ++k) out[static_cast<size_t>(k)] = lam[k];
        return out;
      };
      return dist;
    }
    G g;
    Bound b = bind(g);
    V h = encode_prefix(g, b, prefix);
    const T& probs = g.value(softmax(type_logits(b, h)));
    dist.type_probs.assign(probs.data(), probs.data() + cfg_.K);
    for (int k = 0; k < cfg_.K; ++k) {
      MixtureVars m = mixture_for_type(b, h, k);
      const T& pi = g.value(exp(m.log_pi));
      const T& mu = g.value(m.mu);
      const T& sg = g.value(m.sigma);
      dist.pi.emplace_back(pi.data(), pi.data() + cfg_.M);
      dist.mu.emplace_back(mu.data(), mu.data() + cfg_.M);
      dist.sigma.emplace_back(sg.data(), sg.data() + cfg_.M);
    }
    return dist;
  }

  // One distribution per event position, conditioning on all earlier events.
  // Shares a single incremental encoding pass, so a length-n sequence costs
  // n encoder steps instead of n^2.
  std::vector<NextEventDistribution> per_event_distributions(const EventSequence& seq) {
    require(cfg_.decoder == DecoderKind::density,
            "unsupported operation: prediction requires the density decoder");
    validate_sequence(seq, cfg_.K);
    G g;
    Bound b = bind(g);
    V h = initial_state(g);
    std::vector<NextEventDistribution> out;
    double prev_t = 0.0;
    for (const Event& ev : seq.events) {
      NextEventDistribution dist;
      const T& probs = g.value(softmax(type_logits(b, h)));
      dist.type_probs.assign(probs.data(), probs.data() + cfg_.K);
      for (int k = 0; k < cfg_.K; ++k) {
        MixtureVars m = mixture_for_type(b, h, k);
        const T& pi = g.value(exp(m.log_pi));
        const T& mu = g.value(m.mu);
        const T& sg = g.value(m.sigma);
        dist.pi.emplace_back(pi.data(), pi.data() + cfg_.M);
        dist.mu.emplace_back(mu.data(), mu.data() + cfg_.M);
        dist.sigma.emplace_back(sg.data(), sg.data() + cfg_.M);
      }
      out.push_back(std::move(dist));
      double tau = ev.time - prev_t;
      h = gru_step(b, embed_step(b, ev.type_id, tau), h);
      prev_t = ev.time;
    }
    return out;
  }

  // Next-event prediction: argmax type and the weighted-median time offset.
  std::pair<int, double> predict_next(const std::vector<Event>& prefix) {
    require(cfg_.decoder == DecoderKind::density,
            "unsupported operation: predict_next requires the density decoder");
    NextEventDistribution dist = next_distribution(prefix);
    int best = 0;
    for (int k = 1; k < cfg_.K; ++k)
      if (dist.type_probs[static_cast<size_t>(k)] >
          dist.type_probs[static_cast<size_t>(best)])
        best = k;
    double t_last = prefix.empty() ? 0.0 : prefix.back().time;
    return {best, t_last + predicted_tau(dist)};
  }

  static constexpr double kSigmaFloor = 1e-3;
  static constexpr double kTauFloor = 1e-12;

 private:
  struct Ids {
    int table = -1, time_w = -1, time_b = -1;
    int gru_wz = -1, gru_wr = -1, gru_wh = -1;
    int gru_uz = -1, gru_ur = -1, gru_uh = -1;
    int gru_bz = -1, gru_br = -1, gru_bh = -1;
    int type_w = -1, type_b = -1;
    int pi_w = -1, pi_b = -1, mu_w = -1, mu_b = -1, sg_w = -1, sg_b = -1;
    int mlp1_w = -1, mlp1_b = -1, mlp2_w = -1, mlp2_b = -1;
  };

  V encode_prefix(G& g, const Bound& b, const std::vector<Event>& prefix) {
    V h = initial_state(g);
    double prev_t = 0.0;
    for (const Event& ev : prefix) {
      require(ev.time >= prev_t, "encode_history: events must be time-ordered");
      h = gru_step(b, embed_step(b, ev.type_id, ev.time - prev_t), h);
      prev_t = ev.time;
    }
    return h;
  }

  // Trapezoid integral of sum_k lambda_k over an interval of length delta,
  // measured from the last event. lam_end, when supplied, is the already
  // computed intensity at the right endpoint.
  V compensator(G& g, const Bound& b, V h, double delta, V lam_end) {
    int n = cfg_.quad_points;
    double step = delta / n;
    V acc = scale(sum(intensity_vec(g, b, h, 0.0)), 0.5);
    for (int i = 1; i < n; ++i)
      acc = add(acc, sum(intensity_vec(g, b, h, step * i)));
    V right = lam_end.g ? lam_end : intensity_vec(g, b, h, delta);
    acc = add(acc, scale(sum(right), 0.5));
    return scale(acc, step);
  }

  void init_params(Rng& rng) {
    const int K = cfg_.K, dh = cfg_.d_hidden, dt = cfg_.d_type, dtm = cfg_.d_time,
              M = cfg_.M, in = cfg_.embed_dim();
    auto uni = [&](std::vector<int> shape, int fan_in) {
      Real u = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(fan_in)));
      return T::uniform(std::move(shape), -u, u, rng);
    };
    if (cfg_.mode == Mode::local)
      ids_.table = params_.add("local_table", uni({K, K, dt}, dt));
    else
      ids_.table = params_.add("global_table", uni({K, dt}, dt));
    int ctx = cfg_.context_count();
    ids_.time_w = params_.add("time_w", uni({ctx, dtm}, 1));
    ids_.time_b = params_.add("time_b", T({ctx, dtm}));
    ids_.gru_wz = params_.add("gru_wz", uni({in, dh}, in));
    ids_.gru_wr = params_.add("gru_wr", uni({in, dh}, in));
    ids_.gru_wh = params_.add("gru_wh", uni({in, dh}, in));
    ids_.gru_uz = params_.add("gru_uz", orthogonal(dh, rng));
    ids_.gru_ur = params_.add("gru_ur", orthogonal(dh, rng));
    ids_.gru_uh = params_.add("gru_uh", orthogonal(dh, rng));
    ids_.gru_bz = params_.add("gru_bz", T({1, dh}));
    ids_.gru_br = params_.add("gru_br", T({1, dh}));
    ids_.gru_bh = params_.add("gru_bh", T({1, dh}));
    if (cfg_.decoder == DecoderKind::density) {
      ids_.type_w = params_.add("type_w", uni({K, dh}, dh));
      ids_.type_b = params_.add("type_b", T({K, 1}));
      ids_.pi_w = params_.add("pi_w", uni({K, dh, M}, dh));
      ids_.pi_b = params_.add("pi_b", T({K, M}));
      ids_.mu_w = params_.add("mu_w", uni({K, dh, M}, dh));
      ids_.mu_b = params_.add("mu_b", T({K, M}));
      ids_.sg_w = params_.add("sigma_w", uni({K, dh, M}, dh));
      ids_.sg_b = params_.add("sigma_b", T({K, M}));
    } else {
      ids_.mlp1_w = params_.add("mlp1_w", uni({K, dh + 2, dh}, dh + 2));
      ids_.mlp1_b = params_.add("mlp1_b", T({K, dh}));
      ids_.mlp2_w = params_.add("mlp2_w", uni({K, dh}, dh));
      ids_.mlp2_b = params_.add("mlp2_b", T({K, 1}));
    }
  }

  // QR-style orthogonalization of a seeded Gaussian square matrix.
  static T orthogonal(int n, Rng& rng) {
    T a = T::gaussian({n, n}, rng);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < j; ++i) {
        Real dot = Real(0);
        for (int r = 0; r < n; ++r) dot += a.at(r, i) * a.at(r, j);
        for (int r = 0; r < n; ++r) a.at(r, j) -= dot * a.at(r, i);
      }
      Real norm = Real(0);
      for (int r = 0; r < n; ++r) norm += a.at(r, j) * a.at(r, j);
      norm = std::sqrt(norm);
      if (norm < Real(1e-8)) {
        a.at(j, j) = Real(1);  // degenerate column; fall back to the axis
        norm = Real(1);
      }
      for (int r = 0; r < n; ++r) a.at(r, j) /= norm;
    }
    return a;
  }

  ModelConfig cfg_;
  ParamStore<Real> params_;
  Ids ids_;
};

}  // namespace inf2vec
