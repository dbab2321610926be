#pragma once

// Test-only oracles, independent of the library implementations they check:
// quadrature for likelihood compensators, a Jacobi eigensolver for PCA, a
// brute-force confusion-matrix F1, a hand-unrolled GRU, and a KS test.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "inf2vec/events.hpp"
#include "inf2vec/hawkes.hpp"

namespace oracles {

// Hawkes NLL with the compensator integrated numerically. The intensity is
// smooth between events, so each inter-event interval gets its own trapezoid
// with ~total_points distributed proportionally to interval length.
inline double hawkes_nll_quadrature(const inf2vec::HawkesParams& p,
                                    const inf2vec::Dataset& data,
                                    int total_points = 10000) {
  // include_at_t selects the right limit lambda(t+) at interval starts; the
  // left limit lambda(t-) applies at interval ends and at event times
  auto intensity = [&](const std::vector<inf2vec::Event>& events, int k, double t,
                       bool include_at_t) {
    double acc = p.mu[static_cast<size_t>(k)];
    for (const auto& e : events) {
      if (include_at_t ? e.time > t : e.time >= t) break;
      acc += p.alpha[static_cast<size_t>(k)][static_cast<size_t>(e.type_id)] *
             std::exp(-p.beta[static_cast<size_t>(k)][static_cast<size_t>(e.type_id)] *
                      (t - e.time));
    }
    return acc;
  };
  double nll = 0.0;
  for (const auto& seq : data.sequences) {
    double loglik = 0.0;
    for (const auto& e : seq.events)
      loglik += std::log(intensity(seq.events, e.type_id, e.time, false));
    std::vector<double> knots{0.0};
    for (const auto& e : seq.events) knots.push_back(e.time);
    knots.push_back(seq.horizon);
    double compensator = 0.0;
    for (size_t i = 0; i + 1 < knots.size(); ++i) {
      double a = knots[i], b = knots[i + 1];
      if (b <= a) continue;
      int n = std::max(8, static_cast<int>(total_points * (b - a) / seq.horizon));
      double h = (b - a) / n;
      for (int k = 0; k < p.K; ++k) {
        double acc = 0.5 * (intensity(seq.events, k, a, true) +
                            intensity(seq.events, k, b, false));
        for (int j = 1; j < n; ++j) acc += intensity(seq.events, k, a + j * h, false);
        compensator += acc * h;
      }
    }
    nll -= loglik - compensator;
  }
  return nll;
}

// Kolmogorov-Smirnov distance of samples against Exponential(rate).
inline double ks_distance_exponential(std::vector<double> samples, double rate) {
  std::sort(samples.begin(), samples.end());
  double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    double cdf = 1.0 - std::exp(-rate * samples[i]);
    d = std::max(d, std::fabs(cdf - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - cdf));
  }
  return d;
}

// Asymptotic critical value at significance 0.01: 1.628 / sqrt(n).
inline double ks_critical_001(size_t n) { return 1.62762 / std::sqrt(static_cast<double>(n)); }

// Cyclic Jacobi eigensolver for symmetric matrices; returns the eigenvector
// of the largest eigenvalue.
inline std::vector<double> top_eigenvector_jacobi(std::vector<std::vector<double>> a) {
  size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-24) break;
    for (size_t pp = 0; pp < n; ++pp)
      for (size_t q = pp + 1; q < n; ++q) {
        if (std::fabs(a[pp][q]) < 1e-300) continue;
        double theta = (a[q][q] - a[pp][pp]) / (2.0 * a[pp][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (size_t k = 0; k < n; ++k) {
          double akp = a[k][pp], akq = a[k][q];
          a[k][pp] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          double apk = a[pp][k], aqk = a[q][k];
          a[pp][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (size_t k = 0; k < n; ++k) {
          double vkp = v[k][pp], vkq = v[k][q];
          v[k][pp] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }
  size_t best = 0;
  for (size_t i = 1; i < n; ++i)
    if (a[i][i] > a[best][best]) best = i;
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = v[i][best];
  return out;
}

// Straightforward confusion-matrix weighted F1, written independently of the
// library version (maps keyed by label, no fixed class count).
inline double weighted_f1_bruteforce(const std::vector<int>& truth,
                                     const std::vector<int>& pred) {
  std::map<int, double> tp, fp, fn, support;
  for (size_t i = 0; i < truth.size(); ++i) {
    support[truth[i]] += 1.0;
    if (truth[i] == pred[i])
      tp[truth[i]] += 1.0;
    else {
      fn[truth[i]] += 1.0;
      fp[pred[i]] += 1.0;
    }
  }
  double out = 0.0;
  for (const auto& [cls, sup] : support) {
    double precision_den = tp[cls] + fp[cls];
    double f1 = 0.0;
    if (precision_den > 0.0 && tp[cls] > 0.0) {
      double prec = tp[cls] / precision_den;
      double rec = tp[cls] / sup;
      f1 = 2.0 * prec * rec / (prec + rec);
    }
    out += sup / static_cast<double>(truth.size()) * f1;
  }
  return out;
}

// Two-step GRU recurrence unrolled by hand on plain doubles, one context.
struct TinyGru {
  // weights laid out [input][hidden] and [hidden][hidden]
  std::vector<std::vector<double>> wz, wr, wh, uz, ur, uh;
  std::vector<double> bz, br, bh;

  std::vector<double> step(const std::vector<double>& x,
                           const std::vector<double>& h) const {
    size_t nh = h.size();
    auto affine = [&](const std::vector<std::vector<double>>& w,
                      const std::vector<std::vector<double>>& u,
                      const std::vector<double>& b, const std::vector<double>& hh) {
      std::vector<double> out(nh, 0.0);
      for (size_t j = 0; j < nh; ++j) {
        double acc = b[j];
        for (size_t i = 0; i < x.size(); ++i) acc += x[i] * w[i][j];
        for (size_t i = 0; i < nh; ++i) acc += hh[i] * u[i][j];
        out[j] = acc;
      }
      return out;
    };
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    std::vector<double> z = affine(wz, uz, bz, h), r = affine(wr, ur, br, h);
    for (auto& v : z) v = sig(v);
    for (auto& v : r) v = sig(v);
    std::vector<double> rh(nh);
    for (size_t i = 0; i < nh; ++i) rh[i] = r[i] * h[i];
    std::vector<double> cand = affine(wh, uh, bh, rh);
    for (auto& v : cand) v = std::tanh(v);
    std::vector<double> out(nh);
    for (size_t i = 0; i < nh; ++i) out[i] = (1.0 - z[i]) * h[i] + z[i] * cand[i];
    return out;
  }
};

// Integral over tau of a log-normal mixture density via u = log(tau):
// becomes a plain Gaussian mixture integral on the real line.
inline double mixture_mass_quadrature(const std::vector<double>& pi,
                                      const std::vector<double>& mu,
                                      const std::vector<double>& sigma,
                                      int points = 2000) {
  double lo = mu[0], hi = mu[0], smax = sigma[0];
  for (size_t m = 0; m < mu.size(); ++m) {
    lo = std::min(lo, mu[m]);
    hi = std::max(hi, mu[m]);
    smax = std::max(smax, sigma[m]);
  }
  lo -= 12.0 * smax;
  hi += 12.0 * smax;
  double h = (hi - lo) / points;
  auto f = [&](double u) {
    double acc = 0.0;
    for (size_t m = 0; m < pi.size(); ++m) {
      double z = (u - mu[m]) / sigma[m];
      acc += pi[m] * std::exp(-0.5 * z * z) / (sigma[m] * std::sqrt(2.0 * inf2vec::kPi));
    }
    return acc;
  };
  double acc = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < points; ++i) acc += f(lo + i * h);
  return acc * h;
}

}  // namespace oracles
