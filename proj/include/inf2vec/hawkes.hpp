#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "inf2vec/core.hpp"
#include "inf2vec/events.hpp"
#include "inf2vec/rng.hpp"

namespace inf2vec {

// Exponential-kernel multivariate Hawkes process:
//   lambda_k(t) = mu[k] + sum_{t_i < t} alpha[k][k_i] * exp(-beta[k][k_i] * (t - t_i))
// alpha[k][j] is the excitation that a type-j event exerts on type k.
struct HawkesParams {
  int K = 0;
  std::vector<double> mu;                  // K, >= 0
  std::vector<std::vector<double>> alpha;  // K x K, >= 0
  std::vector<std::vector<double>> beta;   // K x K, > 0
};

inline void validate_params(const HawkesParams& p) {
  require(p.K > 0, "Hawkes params: K must be positive");
  require(static_cast<int>(p.mu.size()) == p.K, "Hawkes params: mu has wrong length");
  require(static_cast<int>(p.alpha.size()) == p.K &&
              static_cast<int>(p.beta.size()) == p.K,
          "Hawkes params: alpha/beta have wrong row count");
  for (int k = 0; k < p.K; ++k) {
    require(std::isfinite(p.mu[k]) && p.mu[k] >= 0.0,
            cat("Hawkes params: mu[", k, "] must be >= 0"));
    require(static_cast<int>(p.alpha[k].size()) == p.K &&
                static_cast<int>(p.beta[k].size()) == p.K,
            cat("Hawkes params: row ", k, " has wrong length"));
    for (int j = 0; j < p.K; ++j) {
      require(std::isfinite(p.alpha[k][j]) && p.alpha[k][j] >= 0.0,
              cat("Hawkes params: alpha[", k, "][", j, "] must be >= 0"));
      require(std::isfinite(p.beta[k][j]) && p.beta[k][j] > 0.0,
              cat("Hawkes params: beta[", k, "][", j, "] must be > 0"));
    }
  }
}

// Branching matrix Gamma[k][j] = alpha[k][j] / beta[k][j]; its spectral
// radius must stay below 1 for the process to be stationary.
inline std::vector<std::vector<double>> branching_matrix(const HawkesParams& p) {
  std::vector<std::vector<double>> g(p.K, std::vector<double>(p.K, 0.0));
  for (int k = 0; k < p.K; ++k)
    for (int j = 0; j < p.K; ++j) g[k][j] = p.alpha[k][j] / p.beta[k][j];
  return g;
}

// Power iteration; Gamma is entrywise non-negative so this converges to the
// Perron root.
inline double spectral_radius(const std::vector<std::vector<double>>& m,
                              int iters = 50, double tol = 1e-9) {
  int n = static_cast<int>(m.size());
  std::vector<double> x(n, 1.0), y(n, 0.0);
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += m[i][j] * x[j];
      y[i] = acc;
      norm = std::max(norm, std::fabs(acc));
    }
    if (norm == 0.0) return 0.0;
    double prev = lambda;
    lambda = norm;
    for (int i = 0; i < n; ++i) x[i] = y[i] / norm;
    if (it > 0 && std::fabs(lambda - prev) <= tol * std::max(1.0, lambda)) break;
  }
  return lambda;
}

inline bool is_stable(const HawkesParams& p) {
  return spectral_radius(branching_matrix(p)) < 1.0;
}

inline void require_stable(const HawkesParams& p) {
  double rho = spectral_radius(branching_matrix(p));
  require(rho < 1.0, cat("unstable Hawkes params: spectral radius of alpha/beta is ",
                         rho, " (must be < 1)"));
}

// Expected event rates (I - Gamma)^{-1} mu, by Gaussian elimination with
// partial pivoting.
inline std::vector<double> stationary_rate(const HawkesParams& p) {
  validate_params(p);
  require_stable(p);
  int n = p.K;
  auto gamma = branching_matrix(p);
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a[i][j] = (i == j ? 1.0 : 0.0) - gamma[i][j];
    a[i][n] = p.mu[i];
  }
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    require(std::fabs(a[piv][c]) > 1e-12,
            "unstable Hawkes params: (I - alpha/beta) is singular");
    std::swap(a[c], a[piv]);
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      double f = a[r][c] / a[c][c];
      for (int j = c; j <= n; ++j) a[r][j] -= f * a[c][j];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int i = 0; i < n; ++i) x[i] = a[i][n] / a[i][i];
  return x;
}

// Conditional intensity of type k at time t given the events strictly
// before t. `history` may be any prefix; every timestamp must be < t.
inline double intensity_at(const HawkesParams& p, const std::vector<Event>& history,
                           int k, double t) {
  require(k >= 0 && k < p.K, cat("intensity_at: type ", k, " out of range"));
  double acc = p.mu[k];
  for (const Event& e : history) {
    require(e.time < t, cat("intensity_at: t = ", t,
                            " is not strictly after history event at ", e.time));
    acc += p.alpha[k][e.type_id] * std::exp(-p.beta[k][e.type_id] * (t - e.time));
  }
  return acc;
}

namespace detail {

// Decay-state view of the intensity: S[k][j] carries
// sum_i exp(-beta[k][j] (t - t_i)) over past events of type j, advanced
// lazily to the current time.
struct HawkesState {
  const HawkesParams* p;
  std::vector<std::vector<double>> s;
  double t = 0.0;

  explicit HawkesState(const HawkesParams& params)
      : p(&params), s(params.K, std::vector<double>(params.K, 0.0)) {}

  void advance(double to) {
    for (int k = 0; k < p->K; ++k)
      for (int j = 0; j < p->K; ++j)
        s[k][j] *= std::exp(-p->beta[k][j] * (to - t));
    t = to;
  }

  void add_event(int type) {
    for (int k = 0; k < p->K; ++k) s[k][type] += 1.0;
  }

  double intensity(int k) const {
    double acc = p->mu[k];
    for (int j = 0; j < p->K; ++j) acc += p->alpha[k][j] * s[k][j];
    return acc;
  }

  double total_intensity() const {
    double acc = 0.0;
    for (int k = 0; k < p->K; ++k) acc += intensity(k);
    return acc;
  }
};

}  // namespace detail

// Ogata's modified thinning. The dominating bound is the total intensity
// just after the current time, recomputed after every candidate; with
// non-negative alpha the total intensity only decays between events, so the
// bound is valid on each proposal interval.
inline EventSequence simulate(const HawkesParams& p, double horizon, Rng& rng,
                              const std::string& seq_id = "sim") {
  validate_params(p);
  require_stable(p);
  require(horizon > 0.0, "simulate: horizon must be positive");
  EventSequence seq;
  seq.seq_id = seq_id;
  seq.horizon = horizon;
  detail::HawkesState state(p);
  double t = 0.0;
  for (;;) {
    double bound = state.total_intensity();
    if (bound <= 0.0) break;  // all-zero mu and empty history: nothing can fire
    double wait = rng.exponential(bound);
    double cand = t + wait;
    if (cand >= horizon) break;
    state.advance(cand);
    t = cand;
    double lam = state.total_intensity();
    require(lam <= bound * (1.0 + 1e-9),
            cat("thinning bound violated: ", lam, " > ", bound));
    bool accepted = rng.uniform() * bound < lam;
    // drop double-precision ties so timestamps stay strictly increasing
    bool distinct = seq.events.empty() || cand > seq.events.back().time;
    if (accepted && distinct) {
      // pick the type proportionally to its intensity
      double pick = rng.uniform() * lam;
      int type = p.K - 1;
      double acc = 0.0;
      for (int k = 0; k < p.K; ++k) {
        acc += state.intensity(k);
        if (pick < acc) {
          type = k;
          break;
        }
      }
      seq.events.push_back(Event{type, cand});
      state.add_event(type);
    }
  }
  return seq;
}

inline EventSequence simulate(const HawkesParams& p, double horizon, uint64_t seed,
                              const std::string& seq_id = "sim") {
  Rng rng(seed);
  return simulate(p, horizon, rng, seq_id);
}

// Each sequence draws from its own (seed, index) stream, so the dataset is
// reproducible independent of evaluation order.
inline Dataset simulate_dataset(const HawkesParams& p, int num_seqs, double horizon,
                                uint64_t seed) {
  validate_params(p);
  require_stable(p);
  require(num_seqs >= 0, "simulate_dataset: num_seqs must be >= 0");
  Dataset data;
  data.num_types = p.K;
  for (int i = 0; i < num_seqs; ++i) {
    Rng rng(seed, static_cast<uint64_t>(i));
    char id[32];
    std::snprintf(id, sizeof(id), "seq%06d", i);
    data.sequences.push_back(simulate(p, horizon, rng, id));
  }
  return data;
}

// Exact negative log-likelihood of the data under the exponential-kernel
// model; the compensator integral has the closed form
//   mu_k T + sum_i alpha[k][k_i]/beta[k][k_i] (1 - exp(-beta[k][k_i](T - t_i))).
inline double hawkes_nll(const HawkesParams& p, const Dataset& data) {
  validate_params(p);
  require(data.num_types == p.K,
          cat("hawkes_nll: dataset has ", data.num_types, " types, params have ", p.K));
  double nll = 0.0;
  for (const EventSequence& seq : data.sequences) {
    detail::HawkesState state(p);
    double loglik = 0.0;
    for (const Event& e : seq.events) {
      state.advance(e.time);
      loglik += std::log(state.intensity(e.type_id));
      state.add_event(e.type_id);
    }
    double compensator = 0.0;
    for (int k = 0; k < p.K; ++k) compensator += p.mu[k] * seq.horizon;
    for (const Event& e : seq.events)
      for (int k = 0; k < p.K; ++k) {
        double b = p.beta[k][e.type_id];
        compensator += p.alpha[k][e.type_id] / b *
                       (1.0 - std::exp(-b * (seq.horizon - e.time)));
      }
    nll -= loglik - compensator;
  }
  return nll;
}

// ---- params file I/O: {"K": int, "mu": [...], "alpha": [[...]], "beta": [[...]]} ----

inline HawkesParams params_from_json(const nlohmann::json& j) {
  HawkesParams p;
  for (const char* field : {"K", "mu", "alpha", "beta"})
    require(j.contains(field), cat("Hawkes params: missing field '", field, "'"));
  try {
    p.K = j.at("K").get<int>();
    p.mu = j.at("mu").get<std::vector<double>>();
    p.alpha = j.at("alpha").get<std::vector<std::vector<double>>>();
    p.beta = j.at("beta").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw error(cat("Hawkes params: malformed JSON: ", e.what()));
  }
  validate_params(p);
  return p;
}

inline nlohmann::json params_to_json(const HawkesParams& p) {
  return nlohmann::json{{"K", p.K}, {"mu", p.mu}, {"alpha", p.alpha}, {"beta", p.beta}};
}

inline HawkesParams load_params(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), cat("cannot open params file '", path, "'"));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw error(cat("bad params file '", path, "': ", e.what()));
  }
  return params_from_json(j);
}

inline void export_truth(const HawkesParams& p, const std::string& path) {
  validate_params(p);
  std::ofstream out(path);
  require(out.good(), cat("cannot write params file '", path, "'"));
  out << params_to_json(p).dump(2) << "\n";
  require(out.good(), cat("write failed for '", path, "'"));
}

// ---- stand-in synthetic configurations ----
// The reference parameterizations are unpublished; these are this project's
// reproducible substitutes. haw5/haw9 are chain-plus-diagonal: each type is
// excited only by itself and its predecessor. hawc9 is a cyclic variant with
// skip links and mixed decay scales.

inline HawkesParams haw5_params() {
  HawkesParams p;
  p.K = 5;
  p.mu.assign(5, 0.05);
  p.alpha.assign(5, std::vector<double>(5, 0.0));
  p.beta.assign(5, std::vector<double>(5, 1.0));
  for (int k = 0; k < 5; ++k) {
    p.alpha[k][k] = 0.15;
    if (k > 0) p.alpha[k][k - 1] = 0.30;
  }
  return p;
}

inline HawkesParams haw9_params() {
  HawkesParams p;
  p.K = 9;
  p.mu.assign(9, 0.04);
  p.alpha.assign(9, std::vector<double>(9, 0.0));
  p.beta.assign(9, std::vector<double>(9, 1.0));
  for (int k = 0; k < 9; ++k) {
    p.alpha[k][k] = 0.15;
    if (k > 0) p.alpha[k][k - 1] = 0.30;
  }
  return p;
}

inline HawkesParams hawc9_params() {
  HawkesParams p;
  p.K = 9;
  p.mu.assign(9, 0.04);
  p.alpha.assign(9, std::vector<double>(9, 0.0));
  p.beta.assign(9, std::vector<double>(9, 1.0));
  for (int k = 0; k < 9; ++k) {
    p.alpha[k][k] = 0.12;
    p.alpha[k][(k + 8) % 9] = 0.25;        // cyclic predecessor
    p.alpha[k][(k + 5) % 9] = 0.10;        // skip link
    p.beta[k][(k + 8) % 9] = (k % 2) ? 2.0 : 0.8;
  }
  return p;
}

inline HawkesParams preset_params(const std::string& name) {
  if (name == "haw5") return haw5_params();
  if (name == "haw9") return haw9_params();
  if (name == "hawc9") return hawc9_params();
  throw error(cat("unknown preset '", name, "' (expected haw5, haw9 or hawc9)"));
}

}  // namespace inf2vec
