#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "inf2vec/core.hpp"
#include "inf2vec/tensor.hpp"

namespace inf2vec {

template <typename R>
struct Parameter {
  std::string name;
  Tensor<R> value;
  Tensor<R> grad;  // same shape as value, accumulated by Graph::backward
};

template <typename R>
class ParamStore {
 public:
  int add(std::string name, Tensor<R> init) {
    for (const auto& p : items_)
      require(p.name != name, cat("duplicate parameter name '", name, "'"));
    Tensor<R> g(init.shape());
    items_.push_back(Parameter<R>{std::move(name), std::move(init), std::move(g)});
    return static_cast<int>(items_.size()) - 1;
  }

  Parameter<R>& operator[](int id) { return items_[static_cast<size_t>(id)]; }
  const Parameter<R>& operator[](int id) const { return items_[static_cast<size_t>(id)]; }

  size_t size() const { return items_.size(); }
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  int64_t coord_count() const {
    int64_t n = 0;
    for (const auto& p : items_) n += p.value.numel();
    return n;
  }

  void zero_grad() {
    for (auto& p : items_)
      std::fill(p.grad.data(), p.grad.data() + p.grad.numel(), R(0));
  }

 private:
  std::vector<Parameter<R>> items_;
};

template <typename R>
class Graph;

// Handle to a node on a Graph's tape.
template <typename R>
struct Var {
  Graph<R>* g = nullptr;
  int id = -1;
};

// Define-by-run reverse-mode tape. A forward pass records one node per
// operation; backward() replays the record in reverse and accumulates
// gradients into every Parameter leaf touched by the pass.
template <typename R>
class Graph {
 public:
  using T = Tensor<R>;
  using BackFn = std::function<void(Graph&, int)>;

  struct Node {
    T value;
    T grad;
    bool has_grad = false;
    Parameter<R>* param = nullptr;
    BackFn backprop;
    const char* op = "leaf";
  };

  Graph() { nodes_.reserve(256); }

  Var<R> constant(T v) { return push("const", std::move(v), nullptr, nullptr); }

  Var<R> scalar(double v) { return constant(T::scalar(static_cast<R>(v))); }

  Var<R> param(Parameter<R>& p) { return push("param", p.value, nullptr, &p); }

  const T& value(Var<R> v) const { return nodes_[static_cast<size_t>(v.id)].value; }
  const T& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  double scalar_value(Var<R> v) const {
    const T& t = value(v);
    require(t.is_scalar(), cat("expected scalar value, got shape ", t.shape_str()));
    return static_cast<double>(t[0]);
  }

  size_t size() const { return nodes_.size(); }

  T& grad_buf(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.has_grad) {
      n.grad = T(n.value.shape());
      n.has_grad = true;
    }
    return n.grad;
  }

  Tensor<R> grad_of(Var<R> v) const {
    const Node& n = nodes_[static_cast<size_t>(v.id)];
    if (!n.has_grad) return T(n.value.shape());
    return n.grad;
  }

  // Reverse sweep from a scalar loss. Parameter gradients are accumulated
  // (not overwritten); callers own the zero_grad boundary.
  void backward(Var<R> loss) {
    require(loss.g == this, "backward: Var belongs to a different graph");
    const T& lv = value(loss);
    require(lv.is_scalar(),
            cat("backward requires a scalar loss, got shape ", lv.shape_str()));
    grad_buf(loss.id)[0] = R(1);
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<size_t>(id)];
      if (!n.has_grad) continue;
      if (n.backprop) n.backprop(*this, id);
      if (n.param) {
        R* pg = n.param->grad.data();
        const R* ng = n.grad.data();
        for (int64_t i = 0; i < n.grad.numel(); ++i) pg[i] += ng[i];
      }
    }
  }

  Var<R> push(const char* op, T value, BackFn back, Parameter<R>* p) {
    if (!value.all_finite())
      throw error(cat("non-finite output in op '", op, "' (node ", nodes_.size(), ")"));
    Node n;
    n.value = std::move(value);
    n.backprop = std::move(back);
    n.param = p;
    n.op = op;
    nodes_.push_back(std::move(n));
    return Var<R>{this, static_cast<int>(nodes_.size()) - 1};
  }

 private:
  std::vector<Node> nodes_;
};

namespace detail {

template <typename R>
Graph<R>& same_graph(Var<R> a, Var<R> b, const char* op) {
  require(a.g != nullptr && b.g != nullptr && a.g == b.g,
          cat(op, ": operands must live on the same graph"));
  return *a.g;
}

// 0: identical shapes, 1: a broadcasts as scalar, 2: b broadcasts as scalar
template <typename R>
int broadcast_mode(const Tensor<R>& a, const Tensor<R>& b, const char* op) {
  if (a.same_shape(b)) return 0;
  if (a.is_scalar()) return 1;
  if (b.is_scalar()) return 2;
  throw error(cat(op, ": shape mismatch ", a.shape_str(), " vs ", b.shape_str()));
}

}  // namespace detail

// ---- elementwise binary ops (scalar-against-tensor broadcast allowed) ----

template <typename R>
Var<R> add(Var<R> a, Var<R> b) {
  Graph<R>& g = detail::same_graph(a, b, "add");
  const Tensor<R>&av = g.value(a), &bv = g.value(b);
  int mode = detail::broadcast_mode(av, bv, "add");
  Tensor<R> out(mode == 1 ? bv.shape() : av.shape());
  int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i)
    out[i] = (mode == 1 ? av[0] : av[i]) + (mode == 2 ? bv[0] : bv[i]);
  int ai = a.id, bi = b.id;
  return g.push("add", std::move(out),
                [ai, bi, mode](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  Tensor<R>&ga = gg.grad_buf(ai), &gb = gg.grad_buf(bi);
                  for (int64_t i = 0; i < go.numel(); ++i) {
                    ga[mode == 1 ? 0 : i] += go[i];
                    gb[mode == 2 ? 0 : i] += go[i];
                  }
                },
                nullptr);
}

template <typename R>
Var<R> sub(Var<R> a, Var<R> b) {
  Graph<R>& g = detail::same_graph(a, b, "sub");
  const Tensor<R>&av = g.value(a), &bv = g.value(b);
  int mode = detail::broadcast_mode(av, bv, "sub");
  Tensor<R> out(mode == 1 ? bv.shape() : av.shape());
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = (mode == 1 ? av[0] : av[i]) - (mode == 2 ? bv[0] : bv[i]);
  int ai = a.id, bi = b.id;
  return g.push("sub", std::move(out),
                [ai, bi, mode](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  Tensor<R>&ga = gg.grad_buf(ai), &gb = gg.grad_buf(bi);
                  for (int64_t i = 0; i < go.numel(); ++i) {
                    ga[mode == 1 ? 0 : i] += go[i];
                    gb[mode == 2 ? 0 : i] -= go[i];
                  }
                },
                nullptr);
}

template <typename R>
Var<R> mul(Var<R> a, Var<R> b) {
  Graph<R>& g = detail::same_graph(a, b, "mul");
  const Tensor<R>&av = g.value(a), &bv = g.value(b);
  int mode = detail::broadcast_mode(av, bv, "mul");
  Tensor<R> out(mode == 1 ? bv.shape() : av.shape());
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = (mode == 1 ? av[0] : av[i]) * (mode == 2 ? bv[0] : bv[i]);
  int ai = a.id, bi = b.id;
  return g.push("mul", std::move(out),
                [ai, bi, mode](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  const Tensor<R>&av2 = gg.value(ai), &bv2 = gg.value(bi);
                  Tensor<R>&ga = gg.grad_buf(ai), &gb = gg.grad_buf(bi);
                  for (int64_t i = 0; i < go.numel(); ++i) {
                    ga[mode == 1 ? 0 : i] += go[i] * (mode == 2 ? bv2[0] : bv2[i]);
                    gb[mode == 2 ? 0 : i] += go[i] * (mode == 1 ? av2[0] : av2[i]);
                  }
                },
                nullptr);
}

template <typename R>
Var<R> div(Var<R> a, Var<R> b) {
  Graph<R>& g = detail::same_graph(a, b, "div");
  const Tensor<R>&av = g.value(a), &bv = g.value(b);
  int mode = detail::broadcast_mode(av, bv, "div");
  Tensor<R> out(mode == 1 ? bv.shape() : av.shape());
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = (mode == 1 ? av[0] : av[i]) / (mode == 2 ? bv[0] : bv[i]);
  int ai = a.id, bi = b.id;
  return g.push("div", std::move(out),
                [ai, bi, mode](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  const Tensor<R>&av2 = gg.value(ai), &bv2 = gg.value(bi);
                  Tensor<R>&ga = gg.grad_buf(ai), &gb = gg.grad_buf(bi);
                  for (int64_t i = 0; i < go.numel(); ++i) {
                    R bx = mode == 2 ? bv2[0] : bv2[i];
                    R ax = mode == 1 ? av2[0] : av2[i];
                    ga[mode == 1 ? 0 : i] += go[i] / bx;
                    gb[mode == 2 ? 0 : i] -= go[i] * ax / (bx * bx);
                  }
                },
                nullptr);
}

// ---- constant-folded scalar ops ----

template <typename R>
Var<R> scale(Var<R> a, double c) {
  Graph<R>& g = *a.g;
  const Tensor<R>& av = g.value(a);
  Tensor<R> out(av.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = av[i] * static_cast<R>(c);
  int ai = a.id;
  return g.push("scale", std::move(out),
                [ai, c](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  Tensor<R>& ga = gg.grad_buf(ai);
                  for (int64_t i = 0; i < go.numel(); ++i)
                    ga[i] += go[i] * static_cast<R>(c);
                },
                nullptr);
}

template <typename R>
Var<R> add_const(Var<R> a, double c) {
  Graph<R>& g = *a.g;
  const Tensor<R>& av = g.value(a);
  Tensor<R> out(av.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = av[i] + static_cast<R>(c);
  int ai = a.id;
  return g.push("add_const", std::move(out),
                [ai](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  Tensor<R>& ga = gg.grad_buf(ai);
                  for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
                },
                nullptr);
}

template <typename R>
Var<R> neg(Var<R> a) {
  return scale(a, -1.0);
}

// ---- elementwise unary ops ----

namespace detail {

template <typename R, class Fwd, class Bwd>
Var<R> unary_op(const char* name, Var<R> a, Fwd fwd, Bwd local_deriv) {
  Graph<R>& g = *a.g;
  const Tensor<R>& av = g.value(a);
  Tensor<R> out(av.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = fwd(av[i]);
  int ai = a.id;
  return g.push(name, std::move(out),
                [ai, local_deriv](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  const Tensor<R>& ov = gg.value(self);
                  const Tensor<R>& av2 = gg.value(ai);
                  Tensor<R>& ga = gg.grad_buf(ai);
                  for (int64_t i = 0; i < go.numel(); ++i)
                    ga[i] += go[i] * local_deriv(av2[i], ov[i]);
                },
                nullptr);
}

template <typename R>
R stable_sigmoid(R x) {
  if (x >= R(0)) return R(1) / (R(1) + std::exp(-x));
  R e = std::exp(x);
  return e / (R(1) + e);
}

}  // namespace detail

template <typename R>
Var<R> sigmoid(Var<R> a) {
  return detail::unary_op(
      "sigmoid", a, [](R x) { return detail::stable_sigmoid(x); },
      [](R, R y) { return y * (R(1) - y); });
}

template <typename R>
Var<R> tanh(Var<R> a) {
  return detail::unary_op(
      "tanh", a, [](R x) { return std::tanh(x); },
      [](R, R y) { return R(1) - y * y; });
}

template <typename R>
Var<R> softplus(Var<R> a) {
  return detail::unary_op(
      "softplus", a,
      [](R x) { return x > R(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](R x, R) { return detail::stable_sigmoid(x); });
}

template <typename R>
Var<R> exp(Var<R> a) {
  return detail::unary_op(
      "exp", a, [](R x) { return std::exp(x); }, [](R, R y) { return y; });
}

template <typename R>
Var<R> log(Var<R> a) {
  return detail::unary_op(
      "log", a, [](R x) { return std::log(x); }, [](R x, R) { return R(1) / x; });
}

// ---- matrix ops ----

template <typename R>
Var<R> matmul(Var<R> a, Var<R> b) {
  Graph<R>& g = detail::same_graph(a, b, "matmul");
  const Tensor<R>&av = g.value(a), &bv = g.value(b);
  require(av.ndim() == 2 && bv.ndim() == 2 && av.cols() == bv.rows(),
          cat("matmul: shape mismatch ", av.shape_str(), " vs ", bv.shape_str()));
  int m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor<R> out({m, n});
  for (int i = 0; i < m; ++i) {
    const R* arow = av.data() + static_cast<size_t>(i) * k;
    R* orow = out.data() + static_cast<size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      R aik = arow[kk];
      if (aik == R(0)) continue;
      const R* brow = bv.data() + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  int ai = a.id, bi = b.id;
  return g.push("matmul", std::move(out),
                [ai, bi, m, k, n](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  const Tensor<R>&av2 = gg.value(ai), &bv2 = gg.value(bi);
                  Tensor<R>&ga = gg.grad_buf(ai), &gb = gg.grad_buf(bi);
                  // dA = dOut * B^T
                  for (int i = 0; i < m; ++i)
                    for (int kk = 0; kk < k; ++kk) {
                      R acc = R(0);
                      const R* grow = go.data() + static_cast<size_t>(i) * n;
                      const R* brow = bv2.data() + static_cast<size_t>(kk) * n;
                      for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
                      ga[static_cast<int64_t>(i) * k + kk] += acc;
                    }
                  // dB = A^T * dOut
                  for (int kk = 0; kk < k; ++kk)
                    for (int i = 0; i < m; ++i) {
                      R aik = av2[static_cast<int64_t>(i) * k + kk];
                      if (aik == R(0)) continue;
                      const R* grow = go.data() + static_cast<size_t>(i) * n;
                      R* gbrow = gb.data() + static_cast<size_t>(kk) * n;
                      for (int j = 0; j < n; ++j) gbrow[j] += aik * grow[j];
                    }
                },
                nullptr);
}

// Per-row weight matrices: out[r, o] = sum_i h[r, i] * w[r, i, o].
// Used for the per-type readout heads, where every event type owns its own
// small affine map.
template <typename R>
Var<R> rowwise_matmul(Var<R> h, Var<R> w) {
  Graph<R>& g = detail::same_graph(h, w, "rowwise_matmul");
  const Tensor<R>&hv = g.value(h), &wv = g.value(w);
  require(hv.ndim() == 2 && wv.ndim() == 3 && hv.rows() == wv.dim(0) &&
              hv.cols() == wv.dim(1),
          cat("rowwise_matmul: shape mismatch ", hv.shape_str(), " vs ", wv.shape_str()));
  int rows = hv.rows(), in = hv.cols(), out_dim = wv.dim(2);
  Tensor<R> out({rows, out_dim});
  for (int r = 0; r < rows; ++r)
    for (int i = 0; i < in; ++i) {
      R x = hv.at(r, i);
      if (x == R(0)) continue;
      const R* wrow = wv.data() + (static_cast<size_t>(r) * in + i) * out_dim;
      R* orow = out.data() + static_cast<size_t>(r) * out_dim;
      for (int o = 0; o < out_dim; ++o) orow[o] += x * wrow[o];
    }
  int hi = h.id, wi = w.id;
  return g.push("rowwise_matmul", std::move(out),
                [hi, wi, rows, in, out_dim](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  const Tensor<R>&hv2 = gg.value(hi), &wv2 = gg.value(wi);
                  Tensor<R>&gh = gg.grad_buf(hi), &gw = gg.grad_buf(wi);
                  for (int r = 0; r < rows; ++r) {
                    const R* grow = go.data() + static_cast<size_t>(r) * out_dim;
                    for (int i = 0; i < in; ++i) {
                      const R* wrow =
                          wv2.data() + (static_cast<size_t>(r) * in + i) * out_dim;
                      R* gwrow = gw.data() + (static_cast<size_t>(r) * in + i) * out_dim;
                      R x = hv2.at(r, i);
                      R acc = R(0);
                      for (int o = 0; o < out_dim; ++o) {
                        acc += grow[o] * wrow[o];
                        gwrow[o] += x * grow[o];
                      }
                      gh.at(r, i) += acc;
                    }
                  }
                },
                nullptr);
}

// ---- structural ops ----

template <typename R>
Var<R> concat_cols(const std::vector<Var<R>>& parts) {
  require(!parts.empty(), "concat_cols: needs at least one input");
  Graph<R>& g = *parts[0].g;
  int rows = g.value(parts[0]).rows();
  int total = 0;
  for (const auto& p : parts) {
    require(p.g == &g, "concat_cols: operands must live on the same graph");
    const Tensor<R>& pv = g.value(p);
    require(pv.ndim() == 2 && pv.rows() == rows,
            cat("concat_cols: row mismatch ", g.value(parts[0]).shape_str(), " vs ",
                pv.shape_str()));
    total += pv.cols();
  }
  Tensor<R> out({rows, total});
  std::vector<int> ids, offsets, widths;
  int off = 0;
  for (const auto& p : parts) {
    const Tensor<R>& pv = g.value(p);
    int c = pv.cols();
    for (int r = 0; r < rows; ++r)
      std::copy(pv.data() + static_cast<size_t>(r) * c,
                pv.data() + static_cast<size_t>(r + 1) * c,
                out.data() + static_cast<size_t>(r) * total + off);
    ids.push_back(p.id);
    offsets.push_back(off);
    widths.push_back(c);
    off += c;
  }
  return g.push("concat", std::move(out),
                [ids, offsets, widths, rows, total](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  for (size_t k = 0; k < ids.size(); ++k) {
                    Tensor<R>& gp = gg.grad_buf(ids[k]);
                    int c = widths[k], o = offsets[k];
                    for (int r = 0; r < rows; ++r)
                      for (int j = 0; j < c; ++j)
                        gp[static_cast<int64_t>(r) * c + j] +=
                            go[static_cast<int64_t>(r) * total + o + j];
                  }
                },
                nullptr);
}

template <typename R>
Var<R> concat_cols(Var<R> a, Var<R> b) {
  return concat_cols(std::vector<Var<R>>{a, b});
}

template <typename R>
Var<R> slice_rows(Var<R> a, int r0, int r1) {
  Graph<R>& g = *a.g;
  const Tensor<R>& av = g.value(a);
  require(av.ndim() == 2 && 0 <= r0 && r0 < r1 && r1 <= av.rows(),
          cat("slice_rows: range [", r0, ", ", r1, ") invalid for shape ",
              av.shape_str()));
  int c = av.cols();
  Tensor<R> out({r1 - r0, c});
  std::copy(av.data() + static_cast<size_t>(r0) * c,
            av.data() + static_cast<size_t>(r1) * c, out.data());
  int ai = a.id;
  return g.push("slice", std::move(out),
                [ai, r0, c](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  Tensor<R>& ga = gg.grad_buf(ai);
                  for (int64_t i = 0; i < go.numel(); ++i)
                    ga[static_cast<int64_t>(r0) * c + i] += go[i];
                },
                nullptr);
}

template <typename R>
Var<R> slice_cols(Var<R> a, int c0, int c1) {
  Graph<R>& g = *a.g;
  const Tensor<R>& av = g.value(a);
  require(av.ndim() == 2 && 0 <= c0 && c0 < c1 && c1 <= av.cols(),
          cat("slice_cols: range [", c0, ", ", c1, ") invalid for shape ",
              av.shape_str()));
  int rows = av.rows(), c = av.cols(), w = c1 - c0;
  Tensor<R> out({rows, w});
  for (int r = 0; r < rows; ++r)
    std::copy(av.data() + static_cast<size_t>(r) * c + c0,
              av.data() + static_cast<size_t>(r) * c + c1,
              out.data() + static_cast<size_t>(r) * w);
  int ai = a.id;
  return g.push("slice", std::move(out),
                [ai, c0, c, w, rows](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  Tensor<R>& ga = gg.grad_buf(ai);
                  for (int r = 0; r < rows; ++r)
                    for (int j = 0; j < w; ++j)
                      ga[static_cast<int64_t>(r) * c + c0 + j] +=
                          go[static_cast<int64_t>(r) * w + j];
                },
                nullptr);
}

template <typename R>
Var<R> gather_rows(Var<R> a, std::vector<int> idx) {
  Graph<R>& g = *a.g;
  const Tensor<R>& av = g.value(a);
  require(av.ndim() == 2, cat("gather_rows: expected 2-D input, got ", av.shape_str()));
  int rows = av.rows(), c = av.cols();
  for (int i : idx)
    require(0 <= i && i < rows,
            cat("gather_rows: index ", i, " out of range for ", rows, " rows"));
  Tensor<R> out({static_cast<int>(idx.size()), c});
  for (size_t r = 0; r < idx.size(); ++r)
    std::copy(av.data() + static_cast<size_t>(idx[r]) * c,
              av.data() + static_cast<size_t>(idx[r] + 1) * c, out.data() + r * c);
  int ai = a.id;
  return g.push("gather_rows", std::move(out),
                [ai, idx = std::move(idx), c](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  Tensor<R>& ga = gg.grad_buf(ai);
                  for (size_t r = 0; r < idx.size(); ++r)
                    for (int j = 0; j < c; ++j)
                      ga[static_cast<int64_t>(idx[r]) * c + j] +=
                          go[static_cast<int64_t>(r) * c + j];
                },
                nullptr);
}

// Replicates a (1 x c) row n times; explicit spelling for row broadcasts.
template <typename R>
Var<R> broadcast_rows(Var<R> v, int n) {
  return gather_rows(v, std::vector<int>(static_cast<size_t>(n), 0));
}

template <typename R>
Var<R> reshape(Var<R> a, std::vector<int> shape) {
  Graph<R>& g = *a.g;
  const Tensor<R>& av = g.value(a);
  Tensor<R> out(shape);
  require(out.numel() == av.numel(),
          cat("reshape: cannot view ", av.shape_str(), " as ",
              Tensor<R>::shape_str(shape)));
  std::copy(av.data(), av.data() + av.numel(), out.data());
  int ai = a.id;
  return g.push("reshape", std::move(out),
                [ai](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  Tensor<R>& ga = gg.grad_buf(ai);
                  for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
                },
                nullptr);
}

// ---- reductions ----

template <typename R>
Var<R> sum(Var<R> a) {
  Graph<R>& g = *a.g;
  const Tensor<R>& av = g.value(a);
  R acc = R(0);
  for (int64_t i = 0; i < av.numel(); ++i) acc += av[i];
  int ai = a.id;
  return g.push("sum", Tensor<R>::scalar(acc),
                [ai](Graph<R>& gg, int self) {
                  R go = gg.grad_buf(self)[0];
                  Tensor<R>& ga = gg.grad_buf(ai);
                  for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += go;
                },
                nullptr);
}

template <typename R>
Var<R> mean(Var<R> a) {
  Graph<R>& g = *a.g;
  const Tensor<R>& av = g.value(a);
  R acc = R(0);
  for (int64_t i = 0; i < av.numel(); ++i) acc += av[i];
  R inv = R(1) / static_cast<R>(av.numel());
  int ai = a.id;
  return g.push("mean", Tensor<R>::scalar(acc * inv),
                [ai, inv](Graph<R>& gg, int self) {
                  R go = gg.grad_buf(self)[0];
                  Tensor<R>& ga = gg.grad_buf(ai);
                  for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += go * inv;
                },
                nullptr);
}

template <typename R>
Var<R> row_sum(Var<R> a) {
  Graph<R>& g = *a.g;
  const Tensor<R>& av = g.value(a);
  require(av.ndim() == 2, cat("row_sum: expected 2-D input, got ", av.shape_str()));
  int rows = av.rows(), c = av.cols();
  Tensor<R> out({rows, 1});
  for (int r = 0; r < rows; ++r) {
    R acc = R(0);
    const R* arow = av.data() + static_cast<size_t>(r) * c;
    for (int j = 0; j < c; ++j) acc += arow[j];
    out[r] = acc;
  }
  int ai = a.id;
  return g.push("row_sum", std::move(out),
                [ai, c](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  Tensor<R>& ga = gg.grad_buf(ai);
                  for (int64_t r = 0; r < go.numel(); ++r)
                    for (int j = 0; j < c; ++j) ga[r * c + j] += go[r];
                },
                nullptr);
}

// ---- normalized reductions (operate on the flattened tensor) ----

template <typename R>
Var<R> softmax(Var<R> a) {
  Graph<R>& g = *a.g;
  const Tensor<R>& av = g.value(a);
  R m = av[0];
  for (int64_t i = 1; i < av.numel(); ++i) m = std::max(m, av[i]);
  Tensor<R> out(av.shape());
  R z = R(0);
  for (int64_t i = 0; i < av.numel(); ++i) {
    out[i] = std::exp(av[i] - m);
    z += out[i];
  }
  for (int64_t i = 0; i < av.numel(); ++i) out[i] /= z;
  int ai = a.id;
  return g.push("softmax", std::move(out),
                [ai](Graph<R>& gg, int self) {
                  const Tensor<R>& go = gg.grad_buf(self);
                  const Tensor<R>& y = gg.value(self);
                  Tensor<R>& ga = gg.grad_buf(ai);
                  R dot = R(0);
                  for (int64_t i = 0; i < go.numel(); ++i) dot += go[i] * y[i];
                  for (int64_t i = 0; i < go.numel(); ++i)
                    ga[i] += y[i] * (go[i] - dot);
                },
                nullptr);
}

template <typename R>
Var<R> logsumexp(Var<R> a) {
  Graph<R>& g = *a.g;
  const Tensor<R>& av = g.value(a);
  R m = av[0];
  for (int64_t i = 1; i < av.numel(); ++i) m = std::max(m, av[i]);
  R z = R(0);
  for (int64_t i = 0; i < av.numel(); ++i) z += std::exp(av[i] - m);
  R lse = m + std::log(z);
  int ai = a.id;
  return g.push("logsumexp", Tensor<R>::scalar(lse),
                [ai](Graph<R>& gg, int self) {
                  R go = gg.grad_buf(self)[0];
                  R out = gg.value(self)[0];
                  const Tensor<R>& av2 = gg.value(ai);
                  Tensor<R>& ga = gg.grad_buf(ai);
                  for (int64_t i = 0; i < av2.numel(); ++i)
                    ga[i] += go * std::exp(av2[i] - out);
                },
                nullptr);
}

// ---- sugar ----

template <typename R>
Var<R> operator+(Var<R> a, Var<R> b) {
  return add(a, b);
}
template <typename R>
Var<R> operator-(Var<R> a, Var<R> b) {
  return sub(a, b);
}
template <typename R>
Var<R> operator*(Var<R> a, Var<R> b) {
  return mul(a, b);
}
template <typename R>
Var<R> operator/(Var<R> a, Var<R> b) {
  return div(a, b);
}

}  // namespace inf2vec
