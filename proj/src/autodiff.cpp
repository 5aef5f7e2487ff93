#include "calmap/autodiff.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace calmap::ad {

namespace {

Var make(Tensor value, std::vector<Var> parents,
         std::function<std::vector<Var>(const Var&)> vjp, const char* op) {
  auto n = std::make_shared<Var::Node>();
  n->value = std::move(value);
  bool rq = false;
  for (const auto& p : parents) rq = rq || p.requires_grad();
  n->requires_grad = rq;
  if (rq) {
    n->parents = std::move(parents);
    n->vjp = std::move(vjp);
  }
  n->op = op;
  return Var(n);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
}

void dgemm_rm(bool ta, bool tb, int m, int n, int k, double alpha, const double* a,
              int lda, const double* b, int ldb, double beta, double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
              m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// collapse (..., H, W) into batch count
int64_t lead_count(const Tensor& t, int keep_last) {
  int64_t n = 1;
  for (int i = 0; i + keep_last < t.dim(); ++i) n *= t.shape(i);
  return n;
}

}  // namespace

// ---------------------------------------------------------------- Var basics

Var Var::leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return Var(n);
}

const Tensor& Var::value() const {
  if (!n_) throw ShapeError("value() on undefined Var");
  return n_->value;
}

bool Var::requires_grad() const { return n_ && n_->requires_grad; }

Var Var::detach() const { return leaf(n_->value, false); }

void Var::set_value(const Tensor& t) {
  check_same_shape(n_->value, t, "set_value");
  std::copy(t.data(), t.data() + t.size(), n_->value.data());
}

// ---------------------------------------------------------------- grad()

std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs,
                      bool create_graph) {
  if (output.value().size() != 1)
    throw ShapeError("grad: output must be scalar");

  // reverse topological order over the requires_grad subgraph
  std::vector<Var::Node*> order;
  std::unordered_map<Var::Node*, int> state;
  std::vector<std::pair<Var::Node*, size_t>> stack;
  if (output.requires_grad()) stack.push_back({output.node().get(), 0});
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx == 0) {
      int& st = state[node];
      if (st != 0) {
        stack.pop_back();
        continue;
      }
      st = 1;
    }
    if (idx < node->parents.size()) {
      Var::Node* p = node->parents[idx].node().get();
      ++idx;
      if (p->requires_grad && state[p] == 0) stack.push_back({p, 0});
    } else {
      state[node] = 2;
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::unordered_map<Var::Node*, Var> gmap;
  if (output.requires_grad())
    gmap[output.node().get()] = Var::constant(Tensor::scalar(1.0));

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Var::Node* node = *it;
    auto found = gmap.find(node);
    if (found == gmap.end() || !node->vjp) continue;
    std::vector<Var> pg = node->vjp(found->second);
    if (pg.size() != node->parents.size())
      throw ShapeError(std::string("vjp arity mismatch in op ") + node->op);
    for (size_t i = 0; i < pg.size(); ++i) {
      if (!pg[i].defined()) continue;
      if (!node->parents[i].requires_grad()) continue;
      Var g = create_graph ? pg[i] : pg[i].detach();
      Var::Node* key = node->parents[i].node().get();
      auto at = gmap.find(key);
      if (at == gmap.end())
        gmap[key] = g;
      else
        at->second = create_graph ? add(at->second, g) : add(at->second, g).detach();
    }
  }

  std::vector<Var> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) {
    auto at = gmap.find(in.node().get());
    if (at == gmap.end())
      out.push_back(Var::constant(Tensor::zeros(in.value().shape())));
    else
      out.push_back(create_graph ? at->second : at->second.detach());
  }
  return out;
}

// ---------------------------------------------------------------- arithmetic

Var add(const Var& a, const Var& b) {
  check_same_shape(a.value(), b.value(), "add");
  Tensor v(a.value().shape());
  const double *pa = a.value().data(), *pb = b.value().data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = pa[i] + pb[i];
  return make(std::move(v), {a, b},
              [](const Var& g) { return std::vector<Var>{g, g}; }, "add");
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a.value(), b.value(), "sub");
  Tensor v(a.value().shape());
  const double *pa = a.value().data(), *pb = b.value().data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = pa[i] - pb[i];
  return make(std::move(v), {a, b},
              [](const Var& g) { return std::vector<Var>{g, neg(g)}; }, "sub");
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a.value(), b.value(), "mul");
  Tensor v(a.value().shape());
  const double *pa = a.value().data(), *pb = b.value().data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = pa[i] * pb[i];
  return make(std::move(v), {a, b},
              [a, b](const Var& g) {
                std::vector<Var> r(2);
                if (a.requires_grad()) r[0] = mul(g, b);
                if (b.requires_grad()) r[1] = mul(g, a);
                return r;
              },
              "mul");
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var scale(const Var& a, double c) {
  Tensor v(a.value().shape());
  const double* pa = a.value().data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = pa[i] * c;
  return make(std::move(v), {a},
              [c](const Var& g) { return std::vector<Var>{scale(g, c)}; }, "scale");
}

Var add_const(const Var& a, double c) {
  Tensor v(a.value().shape());
  const double* pa = a.value().data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = pa[i] + c;
  return make(std::move(v), {a},
              [](const Var& g) { return std::vector<Var>{g}; }, "add_const");
}

Var square(const Var& a) { return mul(a, a); }

namespace {
Var pow_(const Var& a, double p) {
  Tensor v(a.value().shape());
  const double* pa = a.value().data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = std::pow(pa[i], p);
  return make(std::move(v), {a},
              [a, p](const Var& g) {
                return std::vector<Var>{scale(mul(g, pow_(a, p - 1.0)), p)};
              },
              "pow");
}
}  // namespace

Var sqrt_(const Var& a) { return pow_(a, 0.5); }

Var tanh_(const Var& a) {
  Tensor v(a.value().shape());
  const double* pa = a.value().data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = std::tanh(pa[i]);
  return make(std::move(v), {a},
              [a](const Var& g) {
                Var y = tanh_(a);  // rebuilt so double-backward stays exact
                Var one = Var::constant(Tensor::full(a.value().shape(), 1.0));
                return std::vector<Var>{mul(g, sub(one, square(y)))};
              },
              "tanh");
}

Var sigmoid_(const Var& a) {
  Tensor v(a.value().shape());
  const double* pa = a.value().data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = 1.0 / (1.0 + std::exp(-pa[i]));
  return make(std::move(v), {a},
              [a](const Var& g) {
                Var s = sigmoid_(a);
                Var one = Var::constant(Tensor::full(a.value().shape(), 1.0));
                return std::vector<Var>{mul(g, mul(s, sub(one, s)))};
              },
              "sigmoid");
}

namespace {
// g masked by (a > 0); derivative w.r.t. a is zero a.e.
Var where_pos(const Var& a, const Var& g) {
  Tensor v(g.value().shape());
  const double *pa = a.value().data(), *pg = g.value().data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = pa[i] > 0.0 ? pg[i] : 0.0;
  return make(std::move(v), {a, g},
              [a](const Var& g2) {
                return std::vector<Var>{Var(), where_pos(a, g2)};
              },
              "where_pos");
}
}  // namespace

Var relu_(const Var& a) {
  Tensor v(a.value().shape());
  const double* pa = a.value().data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = pa[i] > 0.0 ? pa[i] : 0.0;
  return make(std::move(v), {a},
              [a](const Var& g) { return std::vector<Var>{where_pos(a, g)}; },
              "relu");
}

// ---------------------------------------------------------------- broadcast

namespace {
void check_c11(const Tensor& a, const Tensor& s, const char* op) {
  if (a.dim() != 3 || s.dim() != 3 || s.shape(1) != 1 || s.shape(2) != 1 ||
      s.shape(0) != a.shape(0))
    throw ShapeError(std::string(op) + ": want (C,H,W) with (C,1,1), got " +
                     a.shape_str() + " and " + s.shape_str());
}

Var channel_sum(const Var& a);

Var bcast_c11(const Var& s, std::vector<int> shape) {
  Tensor v(shape);
  const double* ps = s.value().data();
  double* pv = v.data();
  int c = shape[0];
  int64_t hw = static_cast<int64_t>(shape[1]) * shape[2];
  for (int ci = 0; ci < c; ++ci)
    for (int64_t i = 0; i < hw; ++i) pv[ci * hw + i] = ps[ci];
  return make(std::move(v), {s},
              [](const Var& g) { return std::vector<Var>{channel_sum(g)}; },
              "bcast_c11");
}

Var channel_sum(const Var& a) {
  const Tensor& av = a.value();
  if (av.dim() != 3) throw ShapeError("channel_sum wants (C,H,W)");
  int c = av.shape(0);
  int64_t hw = static_cast<int64_t>(av.shape(1)) * av.shape(2);
  Tensor v({c, 1, 1});
  const double* pa = av.data();
  for (int ci = 0; ci < c; ++ci) {
    double s = 0;
    for (int64_t i = 0; i < hw; ++i) s += pa[ci * hw + i];
    v[ci] = s;
  }
  std::vector<int> shape = av.shape();
  return make(std::move(v), {a},
              [shape](const Var& g) {
                return std::vector<Var>{bcast_c11(g, shape)};
              },
              "channel_sum");
}
}  // namespace

Var bmul(const Var& a, const Var& s) {
  check_c11(a.value(), s.value(), "bmul");
  const Tensor& av = a.value();
  Tensor v(av.shape());
  int c = av.shape(0);
  int64_t hw = static_cast<int64_t>(av.shape(1)) * av.shape(2);
  const double *pa = av.data(), *ps = s.value().data();
  double* pv = v.data();
  for (int ci = 0; ci < c; ++ci)
    for (int64_t i = 0; i < hw; ++i) pv[ci * hw + i] = pa[ci * hw + i] * ps[ci];
  return make(std::move(v), {a, s},
              [a, s](const Var& g) {
                std::vector<Var> r(2);
                if (a.requires_grad()) r[0] = bmul(g, s);
                if (s.requires_grad()) r[1] = channel_sum(mul(g, a));
                return r;
              },
              "bmul");
}

Var badd(const Var& a, const Var& s) {
  check_c11(a.value(), s.value(), "badd");
  const Tensor& av = a.value();
  Tensor v(av.shape());
  int c = av.shape(0);
  int64_t hw = static_cast<int64_t>(av.shape(1)) * av.shape(2);
  const double *pa = av.data(), *ps = s.value().data();
  double* pv = v.data();
  for (int ci = 0; ci < c; ++ci)
    for (int64_t i = 0; i < hw; ++i) pv[ci * hw + i] = pa[ci * hw + i] + ps[ci];
  return make(std::move(v), {a, s},
              [](const Var& g) {
                return std::vector<Var>{g, channel_sum(g)};
              },
              "badd");
}

Var recip(const Var& a) {
  Tensor v(a.value().shape());
  const double* pa = a.value().data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = 1.0 / pa[i];
  return make(std::move(v), {a},
              [a](const Var& g) {
                Var r = recip(a);
                return std::vector<Var>{neg(mul(g, square(r)))};
              },
              "recip");
}

// ---------------------------------------------------------------- reductions

namespace {
Var bcast_all(const Var& s, std::vector<int> shape) {
  Tensor v(shape);
  double x = s.value().item();
  v.fill(x);
  return make(std::move(v), {s},
              [](const Var& g) { return std::vector<Var>{sum_all(g)}; },
              "bcast_all");
}
}  // namespace

Var sum_all(const Var& a) {
  Tensor v = Tensor::scalar(a.value().sum());
  std::vector<int> shape = a.value().shape();
  return make(std::move(v), {a},
              [shape](const Var& g) {
                return std::vector<Var>{bcast_all(g, shape)};
              },
              "sum_all");
}

Var mean_all(const Var& a) {
  return scale(sum_all(a), 1.0 / static_cast<double>(a.value().size()));
}

Var channel_mean(const Var& a) {
  const Tensor& av = a.value();
  double inv = 1.0 / (static_cast<double>(av.shape(1)) * av.shape(2));
  return scale(channel_sum(a), inv);
}

// ---------------------------------------------------------------- linear map

Var matvec(const Tensor& m, const Var& x) {
  if (m.dim() != 2 || m.shape(1) != x.value().size())
    throw ShapeError("matvec: incompatible shapes");
  int rows = m.shape(0), cols = m.shape(1);
  Tensor v({rows});
  cblas_dgemv(CblasRowMajor, CblasNoTrans, rows, cols, 1.0, m.data(), cols,
              x.value().data(), 1, 0.0, v.data(), 1);
  std::vector<int> xshape = x.value().shape();
  return make(std::move(v), {x},
              [m, cols, rows, xshape](const Var& g) {
                Tensor mt({cols, rows});
                for (int i = 0; i < rows; ++i)
                  for (int j = 0; j < cols; ++j) mt.at(j, i) = m.at(i, j);
                return std::vector<Var>{reshape(matvec(mt, g), xshape)};
              },
              "matvec");
}

Var reshape(const Var& x, std::vector<int> shape) {
  Tensor v = x.value().reshaped(shape);
  std::vector<int> old = x.value().shape();
  return make(std::move(v), {x},
              [old](const Var& g) { return std::vector<Var>{reshape(g, old)}; },
              "reshape");
}

// ---------------------------------------------------------------- conv trio

namespace kern {

namespace {
// col buffer layout: (Cin*kh*kw, Ho*Wo) row-major
void im2col(const Tensor& x, int kh, int kw, int pad, int ho, int wo, double* col) {
  int cin = x.shape(0), h = x.shape(1), w = x.shape(2);
  const double* px = x.data();
  int64_t owo = static_cast<int64_t>(ho) * wo;
  for (int ci = 0; ci < cin; ++ci) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        double* dst = col + ((static_cast<int64_t>(ci) * kh + ky) * kw + kx) * owo;
        for (int oy = 0; oy < ho; ++oy) {
          int iy = oy + ky - pad;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, 0.0);
            dst += wo;
            continue;
          }
          const double* src = px + (static_cast<int64_t>(ci) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            int ix = ox + kx - pad;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
          dst += wo;
        }
      }
    }
  }
}

void col2im_add(const double* col, int cin, int h, int w, int kh, int kw, int pad,
                int ho, int wo, Tensor& x) {
  double* px = x.data();
  int64_t owo = static_cast<int64_t>(ho) * wo;
  for (int ci = 0; ci < cin; ++ci) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const double* src = col + ((static_cast<int64_t>(ci) * kh + ky) * kw + kx) * owo;
        for (int oy = 0; oy < ho; ++oy) {
          int iy = oy + ky - pad;
          if (iy < 0 || iy >= h) {
            src += wo;
            continue;
          }
          double* dst = px + (static_cast<int64_t>(ci) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            int ix = ox + kx - pad;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
          src += wo;
        }
      }
    }
  }
}
}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, int pad) {
  if (x.dim() != 3 || w.dim() != 4 || w.shape(1) != x.shape(0))
    throw ShapeError("conv2d: bad shapes " + x.shape_str() + " " + w.shape_str());
  int cout = w.shape(0), cin = w.shape(1), kh = w.shape(2), kw = w.shape(3);
  int h = x.shape(1), ww = x.shape(2);
  int ho = h + 2 * pad - kh + 1, wo = ww + 2 * pad - kw + 1;
  if (ho <= 0 || wo <= 0) throw ShapeError("conv2d: kernel larger than padded input");
  int k = cin * kh * kw;
  int64_t n = static_cast<int64_t>(ho) * wo;
  std::vector<double> col(static_cast<size_t>(k) * n);
  im2col(x, kh, kw, pad, ho, wo, col.data());
  Tensor y({cout, ho, wo});
  dgemm_rm(false, false, cout, static_cast<int>(n), k, 1.0, w.data(), k, col.data(),
           static_cast<int>(n), 0.0, y.data(), static_cast<int>(n));
  return y;
}

Tensor conv2d_dx(const Tensor& gy, const Tensor& w, int pad,
                 const std::vector<int>& x_shape) {
  int cout = w.shape(0), cin = w.shape(1), kh = w.shape(2), kw = w.shape(3);
  int ho = gy.shape(1), wo = gy.shape(2);
  int k = cin * kh * kw;
  int64_t n = static_cast<int64_t>(ho) * wo;
  std::vector<double> col(static_cast<size_t>(k) * n);
  // col = w^T (k x cout) * gy (cout x n)
  dgemm_rm(true, false, k, static_cast<int>(n), cout, 1.0, w.data(), k, gy.data(),
           static_cast<int>(n), 0.0, col.data(), static_cast<int>(n));
  Tensor gx(x_shape);
  col2im_add(col.data(), cin, x_shape[1], x_shape[2], kh, kw, pad, ho, wo, gx);
  return gx;
}

Tensor conv2d_dw(const Tensor& x, const Tensor& gy, int pad,
                 const std::vector<int>& w_shape) {
  int cout = w_shape[0], cin = w_shape[1], kh = w_shape[2], kw = w_shape[3];
  int ho = gy.shape(1), wo = gy.shape(2);
  int k = cin * kh * kw;
  int64_t n = static_cast<int64_t>(ho) * wo;
  std::vector<double> col(static_cast<size_t>(k) * n);
  im2col(x, kh, kw, pad, ho, wo, col.data());
  Tensor gw({cout, cin, kh, kw});
  // gw (cout x k) = gy (cout x n) * col^T (n x k)
  dgemm_rm(false, true, cout, k, static_cast<int>(n), 1.0, gy.data(),
           static_cast<int>(n), col.data(), static_cast<int>(n), 0.0, gw.data(), k);
  return gw;
}

Tensor avgpool2(const Tensor& x) {
  int c = x.shape(0), h = x.shape(1), w = x.shape(2);
  if (h % 2 || w % 2) throw ShapeError("avgpool2: odd spatial dims");
  Tensor y({c, h / 2, w / 2});
  for (int ci = 0; ci < c; ++ci)
    for (int oy = 0; oy < h / 2; ++oy)
      for (int ox = 0; ox < w / 2; ++ox)
        y.at(ci, oy, ox) = 0.25 * (x.at(ci, 2 * oy, 2 * ox) + x.at(ci, 2 * oy, 2 * ox + 1) +
                                   x.at(ci, 2 * oy + 1, 2 * ox) +
                                   x.at(ci, 2 * oy + 1, 2 * ox + 1));
  return y;
}

Tensor avgpool2_adj(const Tensor& g, const std::vector<int>& x_shape) {
  Tensor y(x_shape);
  int c = g.shape(0), ho = g.shape(1), wo = g.shape(2);
  for (int ci = 0; ci < c; ++ci)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        double v = 0.25 * g.at(ci, oy, ox);
        y.at(ci, 2 * oy, 2 * ox) += v;
        y.at(ci, 2 * oy, 2 * ox + 1) += v;
        y.at(ci, 2 * oy + 1, 2 * ox) += v;
        y.at(ci, 2 * oy + 1, 2 * ox + 1) += v;
      }
  return y;
}

namespace {
// taps for 2x bilinear upsampling along one axis (align_corners=false)
struct Tap {
  int i0, i1;
  double w0, w1;
};
std::vector<Tap> up_taps(int n_in) {
  std::vector<Tap> taps(2 * n_in);
  for (int o = 0; o < 2 * n_in; ++o) {
    double pos = (o + 0.5) / 2.0 - 0.5;
    int i0 = static_cast<int>(std::floor(pos));
    double f = pos - i0;
    int i1 = i0 + 1;
    if (i0 < 0) i0 = 0;
    if (i1 > n_in - 1) i1 = n_in - 1;
    taps[o] = {i0, i1, 1.0 - f, f};
  }
  return taps;
}
}  // namespace

Tensor up_bilinear2(const Tensor& x) {
  int c = x.shape(0), h = x.shape(1), w = x.shape(2);
  auto ty = up_taps(h), tx = up_taps(w);
  Tensor y({c, 2 * h, 2 * w});
  for (int ci = 0; ci < c; ++ci)
    for (int oy = 0; oy < 2 * h; ++oy) {
      const Tap& a = ty[oy];
      for (int ox = 0; ox < 2 * w; ++ox) {
        const Tap& b = tx[ox];
        y.at(ci, oy, ox) = a.w0 * (b.w0 * x.at(ci, a.i0, b.i0) + b.w1 * x.at(ci, a.i0, b.i1)) +
                           a.w1 * (b.w0 * x.at(ci, a.i1, b.i0) + b.w1 * x.at(ci, a.i1, b.i1));
      }
    }
  return y;
}

Tensor up_bilinear2_adj(const Tensor& g, const std::vector<int>& x_shape) {
  int c = x_shape[0], h = x_shape[1], w = x_shape[2];
  auto ty = up_taps(h), tx = up_taps(w);
  Tensor y(x_shape);
  for (int ci = 0; ci < c; ++ci)
    for (int oy = 0; oy < 2 * h; ++oy) {
      const Tap& a = ty[oy];
      for (int ox = 0; ox < 2 * w; ++ox) {
        const Tap& b = tx[ox];
        double v = g.at(ci, oy, ox);
        y.at(ci, a.i0, b.i0) += a.w0 * b.w0 * v;
        y.at(ci, a.i0, b.i1) += a.w0 * b.w1 * v;
        y.at(ci, a.i1, b.i0) += a.w1 * b.w0 * v;
        y.at(ci, a.i1, b.i1) += a.w1 * b.w1 * v;
      }
    }
  return y;
}

namespace {
int reflect_index(int i, int n) {
  // reflect without repeating the edge sample: -1 -> 1, n -> n-2
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}
}  // namespace

Tensor pad_reflect(const Tensor& x, int py, int px) {
  int c = x.shape(0), h = x.shape(1), w = x.shape(2);
  Tensor y({c, h + 2 * py, w + 2 * px});
  for (int ci = 0; ci < c; ++ci)
    for (int oy = 0; oy < h + 2 * py; ++oy) {
      int iy = reflect_index(oy - py, h);
      for (int ox = 0; ox < w + 2 * px; ++ox)
        y.at(ci, oy, ox) = x.at(ci, iy, reflect_index(ox - px, w));
    }
  return y;
}

Tensor pad_reflect_adj(const Tensor& g, int py, int px) {
  int c = g.shape(0), ho = g.shape(1), wo = g.shape(2);
  int h = ho - 2 * py, w = wo - 2 * px;
  Tensor y({c, h, w});
  for (int ci = 0; ci < c; ++ci)
    for (int oy = 0; oy < ho; ++oy) {
      int iy = reflect_index(oy - py, h);
      for (int ox = 0; ox < wo; ++ox)
        y.at(ci, iy, reflect_index(ox - px, w)) += g.at(ci, oy, ox);
    }
  return y;
}

// finite differences along the last (x) and second-to-last (y) axes
Tensor diff_x(const Tensor& t, double inv_h) {
  int w = t.shape(t.dim() - 1);
  int64_t rows = lead_count(t, 1);
  Tensor y(t.shape());
  const double* p = t.data();
  double* q = y.data();
  double c = 0.5 * inv_h;
  for (int64_t r = 0; r < rows; ++r, p += w, q += w) {
    if (w == 1) {
      q[0] = 0;
      continue;
    }
    q[0] = (p[1] - p[0]) * inv_h;
    for (int j = 1; j < w - 1; ++j) q[j] = (p[j + 1] - p[j - 1]) * c;
    q[w - 1] = (p[w - 1] - p[w - 2]) * inv_h;
  }
  return y;
}

Tensor diff_x_adj(const Tensor& g, double inv_h) {
  int w = g.shape(g.dim() - 1);
  int64_t rows = lead_count(g, 1);
  Tensor y(g.shape());
  const double* p = g.data();
  double* q = y.data();
  double c = 0.5 * inv_h;
  for (int64_t r = 0; r < rows; ++r, p += w, q += w) {
    if (w == 1) continue;
    q[1] += p[0] * inv_h;
    q[0] -= p[0] * inv_h;
    for (int j = 1; j < w - 1; ++j) {
      q[j + 1] += p[j] * c;
      q[j - 1] -= p[j] * c;
    }
    q[w - 1] += p[w - 1] * inv_h;
    q[w - 2] -= p[w - 1] * inv_h;
  }
  return y;
}

namespace {
// apply a row-wise op along the y axis by striding
template <typename F>
Tensor along_y(const Tensor& t, F f) {
  int d = t.dim();
  int h = t.shape(d - 2), w = t.shape(d - 1);
  int64_t planes = lead_count(t, 2);
  Tensor y(t.shape());
  std::vector<double> colin(h), colout(h);
  const double* p = t.data();
  double* q = y.data();
  for (int64_t pl = 0; pl < planes; ++pl) {
    const double* bp = p + pl * h * w;
    double* bq = q + pl * h * w;
    for (int x = 0; x < w; ++x) {
      for (int i = 0; i < h; ++i) colin[i] = bp[static_cast<int64_t>(i) * w + x];
      f(colin.data(), colout.data(), h);
      for (int i = 0; i < h; ++i) bq[static_cast<int64_t>(i) * w + x] = colout[i];
    }
  }
  return y;
}
}  // namespace

Tensor diff_y(const Tensor& t, double inv_h) {
  double c = 0.5 * inv_h;
  return along_y(t, [&](const double* p, double* q, int n) {
    if (n == 1) {
      q[0] = 0;
      return;
    }
    q[0] = (p[1] - p[0]) * inv_h;
    for (int j = 1; j < n - 1; ++j) q[j] = (p[j + 1] - p[j - 1]) * c;
    q[n - 1] = (p[n - 1] - p[n - 2]) * inv_h;
  });
}

Tensor diff_y_adj(const Tensor& g, double inv_h) {
  double c = 0.5 * inv_h;
  return along_y(g, [&](const double* p, double* q, int n) {
    std::fill(q, q + n, 0.0);
    if (n == 1) return;
    q[1] += p[0] * inv_h;
    q[0] -= p[0] * inv_h;
    for (int j = 1; j < n - 1; ++j) {
      q[j + 1] += p[j] * c;
      q[j - 1] -= p[j] * c;
    }
    q[n - 1] += p[n - 1] * inv_h;
    q[n - 2] -= p[n - 1] * inv_h;
  });
}

}  // namespace kern

Var conv2d(const Var& x, const Var& w, int pad) {
  Tensor y = kern::conv2d(x.value(), w.value(), pad);
  std::vector<int> xs = x.value().shape(), ws = w.value().shape();
  return make(std::move(y), {x, w},
              [x, w, pad, xs, ws](const Var& g) {
                std::vector<Var> r(2);
                if (x.requires_grad()) r[0] = conv2d_dx(g, w, pad, xs);
                if (w.requires_grad()) r[1] = conv2d_dw(x, g, pad, ws);
                return r;
              },
              "conv2d");
}

Var conv2d_dx(const Var& gy, const Var& w, int pad, std::vector<int> x_shape) {
  Tensor y = kern::conv2d_dx(gy.value(), w.value(), pad, x_shape);
  std::vector<int> ws = w.value().shape();
  return make(std::move(y), {gy, w},
              [gy, w, pad, ws](const Var& g2) {
                std::vector<Var> r(2);
                if (gy.requires_grad()) r[0] = conv2d(g2, w, pad);
                if (w.requires_grad()) r[1] = conv2d_dw(g2, gy, pad, ws);
                return r;
              },
              "conv2d_dx");
}

Var conv2d_dw(const Var& x, const Var& gy, int pad, std::vector<int> w_shape) {
  Tensor y = kern::conv2d_dw(x.value(), gy.value(), pad, w_shape);
  std::vector<int> xs = x.value().shape();
  return make(std::move(y), {x, gy},
              [x, gy, pad, xs](const Var& g2) {
                std::vector<Var> r(2);
                if (x.requires_grad()) r[0] = conv2d_dx(gy, g2, pad, xs);
                if (gy.requires_grad()) r[1] = conv2d(x, g2, pad);
                return r;
              },
              "conv2d_dw");
}

Var avgpool2(const Var& x) {
  Tensor y = kern::avgpool2(x.value());
  std::vector<int> xs = x.value().shape();
  return make(std::move(y), {x},
              [xs](const Var& g) { return std::vector<Var>{avgpool2_adj(g, xs)}; },
              "avgpool2");
}

Var avgpool2_adj(const Var& g, std::vector<int> x_shape) {
  Tensor y = kern::avgpool2_adj(g.value(), x_shape);
  return make(std::move(y), {g},
              [](const Var& g2) { return std::vector<Var>{avgpool2(g2)}; },
              "avgpool2_adj");
}

Var up_bilinear2(const Var& x) {
  Tensor y = kern::up_bilinear2(x.value());
  std::vector<int> xs = x.value().shape();
  return make(std::move(y), {x},
              [xs](const Var& g) { return std::vector<Var>{up_bilinear2_adj(g, xs)}; },
              "up_bilinear2");
}

Var up_bilinear2_adj(const Var& g, std::vector<int> x_shape) {
  Tensor y = kern::up_bilinear2_adj(g.value(), x_shape);
  return make(std::move(y), {g},
              [](const Var& g2) { return std::vector<Var>{up_bilinear2(g2)}; },
              "up_bilinear2_adj");
}

Var concat_ch(const Var& a, const Var& b) {
  const Tensor &av = a.value(), &bv = b.value();
  if (av.dim() != 3 || bv.dim() != 3 || av.shape(1) != bv.shape(1) ||
      av.shape(2) != bv.shape(2))
    throw ShapeError("concat_ch: spatial mismatch");
  int ca = av.shape(0), cb = bv.shape(0);
  Tensor y({ca + cb, av.shape(1), av.shape(2)});
  std::copy(av.data(), av.data() + av.size(), y.data());
  std::copy(bv.data(), bv.data() + bv.size(), y.data() + av.size());
  return make(std::move(y), {a, b},
              [ca, cb](const Var& g) {
                return std::vector<Var>{slice_ch(g, 0, ca), slice_ch(g, ca, ca + cb)};
              },
              "concat_ch");
}

namespace {
Var embed_ch(const Var& x, int c0, int c_total) {
  const Tensor& xv = x.value();
  Tensor y({c_total, xv.shape(1), xv.shape(2)});
  int64_t hw = static_cast<int64_t>(xv.shape(1)) * xv.shape(2);
  std::copy(xv.data(), xv.data() + xv.size(), y.data() + c0 * hw);
  int c1 = c0 + xv.shape(0);
  return make(std::move(y), {x},
              [c0, c1](const Var& g) {
                return std::vector<Var>{slice_ch(g, c0, c1)};
              },
              "embed_ch");
}
}  // namespace

Var slice_ch(const Var& x, int c0, int c1) {
  const Tensor& xv = x.value();
  if (xv.dim() != 3 || c0 < 0 || c1 > xv.shape(0) || c0 >= c1)
    throw ShapeError("slice_ch: bad channel range");
  int64_t hw = static_cast<int64_t>(xv.shape(1)) * xv.shape(2);
  Tensor y({c1 - c0, xv.shape(1), xv.shape(2)});
  std::copy(xv.data() + c0 * hw, xv.data() + c1 * hw, y.data());
  int c_total = xv.shape(0);
  return make(std::move(y), {x},
              [c0, c_total](const Var& g) {
                return std::vector<Var>{embed_ch(g, c0, c_total)};
              },
              "slice_ch");
}

Var pad_reflect(const Var& x, int py, int px) {
  Tensor y = kern::pad_reflect(x.value(), py, px);
  return make(std::move(y), {x},
              [py, px](const Var& g) {
                Tensor t = kern::pad_reflect_adj(g.value(), py, px);
                return std::vector<Var>{make(
                    std::move(t), {g},
                    [py, px](const Var& g2) {
                      return std::vector<Var>{pad_reflect(g2, py, px)};
                    },
                    "pad_reflect_adj")};
              },
              "pad_reflect");
}

namespace {
Var embed_hw(const Var& x, int y0, int x0, std::vector<int> full_shape) {
  const Tensor& xv = x.value();
  Tensor y(full_shape);
  int c = xv.shape(0), h = xv.shape(1), w = xv.shape(2);
  for (int ci = 0; ci < c; ++ci)
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) y.at(ci, y0 + iy, x0 + ix) = xv.at(ci, iy, ix);
  return make(std::move(y), {x},
              [y0, x0, h, w](const Var& g) {
                return std::vector<Var>{crop_hw(g, y0, x0, h, w)};
              },
              "embed_hw");
}
}  // namespace

Var crop_hw(const Var& x, int y0, int x0, int h, int w) {
  const Tensor& xv = x.value();
  if (xv.dim() != 3 || y0 + h > xv.shape(1) || x0 + w > xv.shape(2))
    throw ShapeError("crop_hw: window out of range");
  int c = xv.shape(0);
  Tensor y({c, h, w});
  for (int ci = 0; ci < c; ++ci)
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) y.at(ci, iy, ix) = xv.at(ci, y0 + iy, x0 + ix);
  std::vector<int> full = xv.shape();
  return make(std::move(y), {x},
              [y0, x0, full](const Var& g) {
                return std::vector<Var>{embed_hw(g, y0, x0, full)};
              },
              "crop_hw");
}

Var diff_x(const Var& x, double inv_h) {
  Tensor y = kern::diff_x(x.value(), inv_h);
  return make(std::move(y), {x},
              [inv_h](const Var& g) {
                Tensor t = kern::diff_x_adj(g.value(), inv_h);
                return std::vector<Var>{make(
                    std::move(t), {g},
                    [inv_h](const Var& g2) {
                      return std::vector<Var>{diff_x(g2, inv_h)};
                    },
                    "diff_x_adj")};
              },
              "diff_x");
}

Var diff_y(const Var& x, double inv_h) {
  Tensor y = kern::diff_y(x.value(), inv_h);
  return make(std::move(y), {x},
              [inv_h](const Var& g) {
                Tensor t = kern::diff_y_adj(g.value(), inv_h);
                return std::vector<Var>{make(
                    std::move(t), {g},
                    [inv_h](const Var& g2) {
                      return std::vector<Var>{diff_y(g2, inv_h)};
                    },
                    "diff_y_adj")};
              },
              "diff_y");
}

}  // namespace calmap::ad
