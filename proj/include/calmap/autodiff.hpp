#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "calmap/tensor.hpp"

namespace calmap::ad {

/// Reverse-mode autodiff over Tensor. Backward functions build Var graphs,
/// so grad() with create_graph=true returns differentiable gradients. This
/// is what lets the training loss backpropagate through the inner gradient
/// of the variational cost (unrolled solver).
class Var {
 public:
  struct Node;

  Var() = default;
  explicit Var(std::shared_ptr<Node> n) : n_(std::move(n)) {}

  static Var leaf(Tensor value, bool requires_grad = false);
  static Var constant(Tensor value) { return leaf(std::move(value), false); }
  static Var scalar(double v) { return constant(Tensor::scalar(v)); }

  bool defined() const { return static_cast<bool>(n_); }
  const Tensor& value() const;
  bool requires_grad() const;
  Var detach() const;  // same value, no history

  /// In-place value assignment for trainable leaves (optimizer updates).
  void set_value(const Tensor& t);

  std::shared_ptr<Node> node() const { return n_; }

 private:
  std::shared_ptr<Node> n_;
};

struct Var::Node {
  Tensor value;
  bool requires_grad = false;
  std::vector<Var> parents;
  // Maps upstream gradient to per-parent gradients (as Vars, graph-building).
  std::function<std::vector<Var>(const Var& gout)> vjp;
  const char* op = "leaf";
};

/// Gradients of a scalar output w.r.t. each input. With create_graph the
/// returned Vars stay connected to the graph (differentiable); otherwise
/// they are detached.
std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs,
                      bool create_graph = false);

// ---- elementwise / arithmetic ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double c);
Var add_const(const Var& a, double c);
Var square(const Var& a);
Var sqrt_(const Var& a);       // derivative uses the output value
Var tanh_(const Var& a);
Var sigmoid_(const Var& a);
Var relu_(const Var& a);

Var recip(const Var& a);

// ---- broadcast with a (C,1,1) tensor against (C,H,W) ----
Var bmul(const Var& a, const Var& s);
Var badd(const Var& a, const Var& s);

// ---- reductions ----
Var sum_all(const Var& a);      // -> shape {1}
Var mean_all(const Var& a);
Var channel_mean(const Var& a); // (C,H,W) -> (C,1,1)

// ---- linear maps / structure ----
Var matvec(const Tensor& m, const Var& x);  // m: (rows, cols), x flat cols
Var reshape(const Var& x, std::vector<int> shape);

// ---- convolution trio (stride 1, zero padding) ----
// x: (Cin,H,W), w: (Cout,Cin,kh,kw) -> (Cout,H',W') with H' = H + 2p - kh + 1
Var conv2d(const Var& x, const Var& w, int pad);
// gradient of conv2d w.r.t. x given upstream gy: "transposed convolution"
Var conv2d_dx(const Var& gy, const Var& w, int pad, std::vector<int> x_shape);
// gradient of conv2d w.r.t. w
Var conv2d_dw(const Var& x, const Var& gy, int pad, std::vector<int> w_shape);

// ---- resampling ----
Var avgpool2(const Var& x);                               // factor-2 mean pool
Var avgpool2_adj(const Var& g, std::vector<int> x_shape);
Var up_bilinear2(const Var& x);                           // factor-2 bilinear
Var up_bilinear2_adj(const Var& g, std::vector<int> x_shape);

// ---- structure ----
Var concat_ch(const Var& a, const Var& b);
Var slice_ch(const Var& x, int c0, int c1);  // channels [c0, c1)
Var pad_reflect(const Var& x, int py, int px);
Var crop_hw(const Var& x, int y0, int x0, int h, int w);

// ---- finite differences on (…,H,W) fields, spacing given as 1/h ----
Var diff_x(const Var& x, double inv_h);  // central interior, one-sided edges
Var diff_y(const Var& x, double inv_h);

// ---- raw-tensor kernels shared with non-AD code ----
namespace kern {
Tensor conv2d(const Tensor& x, const Tensor& w, int pad);
Tensor conv2d_dx(const Tensor& gy, const Tensor& w, int pad, const std::vector<int>& x_shape);
Tensor conv2d_dw(const Tensor& x, const Tensor& gy, int pad, const std::vector<int>& w_shape);
Tensor avgpool2(const Tensor& x);
Tensor avgpool2_adj(const Tensor& g, const std::vector<int>& x_shape);
Tensor up_bilinear2(const Tensor& x);
Tensor up_bilinear2_adj(const Tensor& g, const std::vector<int>& x_shape);
Tensor pad_reflect(const Tensor& x, int py, int px);
Tensor pad_reflect_adj(const Tensor& g, int py, int px);
Tensor diff_x(const Tensor& x, double inv_h);
Tensor diff_x_adj(const Tensor& g, double inv_h);
Tensor diff_y(const Tensor& x, double inv_h);
Tensor diff_y_adj(const Tensor& g, double inv_h);
}  // namespace kern

}  // namespace calmap::ad
