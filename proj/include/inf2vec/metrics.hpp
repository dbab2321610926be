#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "inf2vec/core.hpp"
#include "inf2vec/events.hpp"
#include "inf2vec/hawkes.hpp"
#include "inf2vec/model.hpp"
#include "inf2vec/rng.hpp"
#include "inf2vec/train.hpp"

namespace inf2vec {

struct PredictionRecord {
  int true_type = 0;
  int predicted_type = 0;
  double true_tau = 0.0;
  double predicted_tau = 0.0;
};

// Support-weighted macro F1: per-class F1 (0 when precision+recall is
// undefined), averaged with weights proportional to true-class support.
inline double weighted_f1(const std::vector<PredictionRecord>& records) {
  require(!records.empty(), "weighted_f1: no records");
  int num_classes = 0;
  for (const auto& r : records)
    num_classes = std::max({num_classes, r.true_type + 1, r.predicted_type + 1});
  std::vector<double> tp(static_cast<size_t>(num_classes), 0.0),
      fp(static_cast<size_t>(num_classes), 0.0), fn(static_cast<size_t>(num_classes), 0.0);
  for (const auto& r : records) {
    if (r.true_type == r.predicted_type) {
      tp[static_cast<size_t>(r.true_type)] += 1.0;
    } else {
      fn[static_cast<size_t>(r.true_type)] += 1.0;
      fp[static_cast<size_t>(r.predicted_type)] += 1.0;
    }
  }
  double weighted = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    double support = tp[static_cast<size_t>(c)] + fn[static_cast<size_t>(c)];
    if (support == 0.0) continue;
    double prec_den = tp[static_cast<size_t>(c)] + fp[static_cast<size_t>(c)];
    double f1 = 0.0;
    if (prec_den > 0.0 && tp[static_cast<size_t>(c)] > 0.0) {
      double prec = tp[static_cast<size_t>(c)] / prec_den;
      double rec = tp[static_cast<size_t>(c)] / support;
      f1 = 2.0 * prec * rec / (prec + rec);
    }
    weighted += support / static_cast<double>(records.size()) * f1;
  }
  return weighted;
}

inline double mae(const std::vector<PredictionRecord>& records) {
  require(!records.empty(), "mae: no records");
  double acc = 0.0;
  for (const auto& r : records) acc += std::fabs(r.true_tau - r.predicted_tau);
  return acc / static_cast<double>(records.size());
}

// One record per event: the model predicts event i from the prefix before it.
inline std::vector<PredictionRecord> predict_dataset(Inf2vecModel& model,
                                                     const Dataset& data) {
  require(model.config().K == data.num_types,
          cat("incompatible model: checkpoint has K=", model.config().K,
              " but dataset has K=", data.num_types, " event types"));
  std::vector<PredictionRecord> records;
  for (const auto& seq : data.sequences) {
    auto dists = model.per_event_distributions(seq);
    double prev_t = 0.0;
    for (size_t i = 0; i < seq.events.size(); ++i) {
      const NextEventDistribution& d = dists[i];
      PredictionRecord r;
      r.true_type = seq.events[i].type_id;
      r.true_tau = seq.events[i].time - prev_t;
      r.predicted_type = static_cast<int>(
          std::max_element(d.type_probs.begin(), d.type_probs.end()) -
          d.type_probs.begin());
      r.predicted_tau = predicted_tau(d);
      records.push_back(r);
      prev_t = seq.events[i].time;
    }
  }
  return records;
}

// First principal component by power iteration on the covariance matrix,
// run to a 1e-12 direction tolerance (clustered eigenvalues converge slowly,
// so the cap is generous; each step is a d <= O(10) matvec). Sign convention:
// the projection with the largest magnitude (smallest index on ties) is made
// positive.
inline std::vector<double> pca_reduce_1d(const std::vector<std::vector<double>>& vectors) {
  size_t n = vectors.size();
  require(n >= 2, cat("pca_reduce_1d: needs at least 2 vectors, got ", n));
  size_t d = vectors[0].size();
  for (const auto& v : vectors)
    require(v.size() == d, "pca_reduce_1d: inconsistent vector dimensions");

  std::vector<double> mean(d, 0.0);
  for (const auto& v : vectors)
    for (size_t j = 0; j < d; ++j) mean[j] += v[j];
  for (auto& m : mean) m /= static_cast<double>(n);

  std::vector<std::vector<double>> centered(n, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) centered[i][j] = vectors[i][j] - mean[j];

  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < n; ++i)
    for (size_t a = 0; a < d; ++a)
      for (size_t b = 0; b < d; ++b) cov[a][b] += centered[i][a] * centered[i][b];
  for (auto& row : cov)
    for (auto& x : row) x /= static_cast<double>(n - 1);

  Rng rng(0x9c4a11ce);
  std::vector<double> v(d), w(d);
  double norm = 0.0;
  for (auto& x : v) {
    x = rng.normal();
  }
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;

  for (int it = 0; it < 100000; ++it) {
    for (size_t a = 0; a < d; ++a) {
      double acc = 0.0;
      for (size_t b = 0; b < d; ++b) acc += cov[a][b] * v[b];
      w[a] = acc;
    }
    double wn = 0.0;
    for (double x : w) wn += x * x;
    wn = std::sqrt(wn);
    if (wn < 1e-300) return std::vector<double>(n, 0.0);  // zero covariance
    double diff = 0.0;
    for (size_t a = 0; a < d; ++a) {
      w[a] /= wn;
      diff = std::max(diff, std::fabs(w[a] - v[a]));
    }
    v = w;
    if (diff <= 1e-12) break;
  }

  std::vector<double> proj(n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) proj[i] += centered[i][j] * v[j];

  size_t arg = 0;
  for (size_t i = 1; i < n; ++i)
    if (std::fabs(proj[i]) > std::fabs(proj[arg])) arg = i;
  if (proj[arg] < 0.0)
    for (auto& x : proj) x = -x;
  return proj;
}

// K x K influence summary: row k holds the 1-D PCA projections of the K
// local embeddings living in context k's space, plus their norms.
struct InfluenceMatrix {
  int K = 0;
  std::vector<std::vector<double>> scores;  // mean-centered per row
  std::vector<std::vector<double>> norms;
};

inline InfluenceMatrix influence_matrix(const Checkpoint& ckpt) {
  require(ckpt.config.mode == Mode::local,
          "influence requires a local-mode checkpoint: global mode keeps a single "
          "shared embedding space and has no per-context table");
  const Tensor<Real>* table = nullptr;
  for (const auto& [name, tensor] : ckpt.tensors)
    if (name == "local_table") table = &tensor;
  require(table != nullptr, "checkpoint does not contain a local_table tensor");
  int K = ckpt.config.K, d = ckpt.config.d_type;

  InfluenceMatrix infl;
  infl.K = K;
  for (int k = 0; k < K; ++k) {
    std::vector<std::vector<double>> vecs;
    std::vector<double> norms;
    for (int x = 0; x < K; ++x) {
      std::vector<double> v(static_cast<size_t>(d));
      double nn = 0.0;
      for (int j = 0; j < d; ++j) {
        v[static_cast<size_t>(j)] = static_cast<double>(table->at(k, x, j));
        nn += v[static_cast<size_t>(j)] * v[static_cast<size_t>(j)];
      }
      vecs.push_back(std::move(v));
      norms.push_back(std::sqrt(nn));
    }
    infl.scores.push_back(pca_reduce_1d(vecs));
    infl.norms.push_back(std::move(norms));
  }
  return infl;
}

// Spearman rank correlation with average ranks on ties; 0 when either side
// is tie-degenerate (constant).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && !x.empty(), "spearman: size mismatch");
  auto ranks = [](const std::vector<double>& v) {
    size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n, 0.0);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (size_t t = i; t <= j; ++t) r[order[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  std::vector<double> rx = ranks(x), ry = ranks(y);
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(rx.size());
  my /= static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

enum class TruthReduction { alpha, pca_alpha_beta };

struct AlignmentReport {
  std::vector<double> per_row;           // Spearman of |scores_k| vs the truth row
  double mean_abs = 0.0;                 // mean of |per_row|
  std::vector<double> per_row_signflip;  // best signed-scores correlation over +/-
  double mean_signflip = 0.0;
};

// Compares learned influence rows against Hawkes ground truth. The default
// truth magnitude is the alpha row; the alternative reduces [alpha, beta]
// pairs to one dimension the same way the learned embeddings are reduced.
inline AlignmentReport truth_alignment(const InfluenceMatrix& infl,
                                       const HawkesParams& truth,
                                       TruthReduction reduction = TruthReduction::alpha) {
  require(infl.K == truth.K, cat("truth_alignment: influence matrix has K=", infl.K,
                                 " but truth has K=", truth.K));
  AlignmentReport rep;
  for (int k = 0; k < infl.K; ++k) {
    std::vector<double> truth_row;
    if (reduction == TruthReduction::alpha) {
      truth_row = truth.alpha[static_cast<size_t>(k)];
    } else {
      std::vector<std::vector<double>> ab;
      for (int x = 0; x < infl.K; ++x)
        ab.push_back({truth.alpha[static_cast<size_t>(k)][static_cast<size_t>(x)],
                      truth.beta[static_cast<size_t>(k)][static_cast<size_t>(x)]});
      for (double p : pca_reduce_1d(ab)) truth_row.push_back(std::fabs(p));
    }

    const std::vector<double>& row = infl.scores[static_cast<size_t>(k)];
    bool all_zero = std::all_of(row.begin(), row.end(),
                                [](double v) { return std::fabs(v) < 1e-15; });
    std::vector<double> magnitude;
    if (all_zero) {
      magnitude = infl.norms[static_cast<size_t>(k)];  // fallback when PCA collapsed
    } else {
      for (double v : row) magnitude.push_back(std::fabs(v));
    }
    rep.per_row.push_back(spearman(magnitude, truth_row));

    std::vector<double> flipped(row.size());
    for (size_t i = 0; i < row.size(); ++i) flipped[i] = -row[i];
    rep.per_row_signflip.push_back(
        std::max(spearman(row, truth_row), spearman(flipped, truth_row)));
  }
  for (double r : rep.per_row) rep.mean_abs += std::fabs(r);
  rep.mean_abs /= static_cast<double>(infl.K);
  for (double r : rep.per_row_signflip) rep.mean_signflip += r;
  rep.mean_signflip /= static_cast<double>(infl.K);
  return rep;
}

inline nlohmann::json alignment_to_json(const AlignmentReport& rep) {
  return nlohmann::json{{"per_row", rep.per_row},
                        {"mean_abs_spearman", rep.mean_abs},
                        {"per_row_signflip", rep.per_row_signflip},
                        {"mean_signflip_spearman", rep.mean_signflip}};
}

// ---- heatmap export ----

inline void save_csv_matrix(const std::vector<std::vector<double>>& m,
                            const std::string& path) {
  std::ofstream out(path);
  require(out.good(), cat("cannot write '", path, "'"));
  char buf[64];
  for (const auto& row : m) {
    for (size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  require(out.good(), cat("write failed for '", path, "'"));
}

inline std::vector<std::vector<double>> load_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), cat("cannot open '", path, "'"));
  std::vector<std::vector<double>> m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    m.push_back(std::move(row));
  }
  return m;
}

// Brightness heatmap in the style of the influence figures: cell (x, k) is
// the score of type x within context k, min-max normalized per row;
// brighter means stronger. A constant row maps to mid-gray.
inline void save_svg_heatmap(const std::vector<std::vector<double>>& m,
                             const std::string& path) {
  require(!m.empty(), "save_svg_heatmap: empty matrix");
  int rows = static_cast<int>(m.size());
  int cols = static_cast<int>(m[0].size());
  const int cell = 40, margin = 48;
  int width = margin + cols * cell + 12;
  int height = margin + rows * cell + 12;

  std::ofstream out(path);
  require(out.good(), cat("cannot write '", path, "'"));
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  for (int x = 0; x < cols; ++x)
    out << "<text x=\"" << margin + x * cell + cell / 2 << "\" y=\"" << margin - 10
        << "\" font-size=\"12\" text-anchor=\"middle\" fill=\"black\">" << x
        << "</text>\n";
  for (int k = 0; k < rows; ++k) {
    double lo = *std::min_element(m[static_cast<size_t>(k)].begin(),
                                  m[static_cast<size_t>(k)].end());
    double hi = *std::max_element(m[static_cast<size_t>(k)].begin(),
                                  m[static_cast<size_t>(k)].end());
    out << "<text x=\"" << margin - 10 << "\" y=\"" << margin + k * cell + cell / 2 + 4
        << "\" font-size=\"12\" text-anchor=\"end\" fill=\"black\">" << k
        << "</text>\n";
    for (int x = 0; x < cols; ++x) {
      int gray = 128;
      if (hi > lo) {
        double b = (m[static_cast<size_t>(k)][static_cast<size_t>(x)] - lo) / (hi - lo);
        gray = static_cast<int>(std::lround(255.0 * b));
      }
      out << "<rect x=\"" << margin + x * cell << "\" y=\"" << margin + k * cell
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb("
          << gray << "," << gray << "," << gray << ")\" stroke=\"gray\"/>\n";
    }
  }
  out << "</svg>\n";
  require(out.good(), cat("write failed for '", path, "'"));
}

inline void heatmap_export(const InfluenceMatrix& infl, const std::string& csv_path,
                           const std::string& svg_path) {
  save_csv_matrix(infl.scores, csv_path);
  save_svg_heatmap(infl.scores, svg_path);
}

}  // namespace inf2vec
