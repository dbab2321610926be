#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "inf2vec/graph.hpp"

namespace inf2vec {

template <typename R>
struct AdamState {
  std::vector<Tensor<R>> m, v;
  int64_t step = 0;

  static AdamState for_params(const ParamStore<R>& params) {
    AdamState s;
    for (const auto& p : params) {
      s.m.push_back(Tensor<R>(p.value.shape()));
      s.v.push_back(Tensor<R>(p.value.shape()));
    }
    return s;
  }
};

// Standard Adam with bias correction. Deterministic: no internal state
// beyond the moment estimates.
template <typename R>
void adam_step(ParamStore<R>& params, AdamState<R>& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  require(state.m.size() == params.size(), "adam_step: state does not match params");
  state.step += 1;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter<R>& p = params[static_cast<int>(i)];
    Tensor<R>&m = state.m[i], &v = state.v[i];
    require(m.same_shape(p.value),
            cat("adam_step: state shape ", m.shape_str(), " does not match parameter '",
                p.name, "' ", p.value.shape_str()));
    for (int64_t j = 0; j < p.value.numel(); ++j) {
      double g = static_cast<double>(p.grad[j]);
      double mj = beta1 * static_cast<double>(m[j]) + (1.0 - beta1) * g;
      double vj = beta2 * static_cast<double>(v[j]) + (1.0 - beta2) * g * g;
      m[j] = static_cast<R>(mj);
      v[j] = static_cast<R>(vj);
      double mhat = mj / bc1;
      double vhat = vj / bc2;
      p.value[j] -= static_cast<R>(lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
}

template <typename R>
double global_grad_norm(const ParamStore<R>& params) {
  double acc = 0.0;
  for (const auto& p : params)
    for (int64_t j = 0; j < p.grad.numel(); ++j) {
      double g = static_cast<double>(p.grad[j]);
      acc += g * g;
    }
  return std::sqrt(acc);
}

// Rescales gradients so the global norm is at most max_norm.
template <typename R>
double clip_gradients(ParamStore<R>& params, double max_norm) {
  double norm = global_grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    double s = max_norm / norm;
    for (auto& p : params)
      for (int64_t j = 0; j < p.grad.numel(); ++j) p.grad[j] *= static_cast<R>(s);
  }
  return norm;
}

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst;  // "param[coord]" of the worst coordinate
};

// Central-difference check of Graph::backward. `build` must construct the
// scalar loss on the supplied graph from the current parameter values, so
// each invocation sees the perturbed coordinates.
template <typename R, class Build>
GradCheckReport finite_diff_check(ParamStore<R>& params, Build build,
                                  double eps = 1e-5, double denom_floor = 1e-3) {
  require(eps > 0.0 && eps <= 1e-2, "finite_diff_check: eps must be in (0, 1e-2]");
  params.zero_grad();
  {
    Graph<R> g;
    Var<R> loss = build(g);
    g.backward(loss);
  }
  auto eval = [&]() {
    Graph<R> g;
    return g.scalar_value(build(g));
  };
  GradCheckReport rep;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter<R>& p = params[static_cast<int>(pi)];
    for (int64_t j = 0; j < p.value.numel(); ++j) {
      R saved = p.value[j];
      p.value[j] = saved + static_cast<R>(eps);
      double fp = eval();
      p.value[j] = saved - static_cast<R>(eps);
      double fm = eval();
      p.value[j] = saved;
      double fd = (fp - fm) / (2.0 * eps);
      double an = static_cast<double>(p.grad[j]);
      double denom = std::max({std::fabs(an), std::fabs(fd), denom_floor});
      double rel = std::fabs(an - fd) / denom;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst = cat(p.name, "[", j, "] analytic=", an, " fd=", fd);
      }
    }
  }
  return rep;
}

}  // namespace inf2vec
