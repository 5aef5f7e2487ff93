#include "calmap/state.hpp"

#include <cmath>

#include "calmap/prior.hpp"

namespace calmap {

namespace {
Tensor masked_fill_zero(const Tensor& values, const Tensor& mask) {
  Tensor out(values.shape());
  for (int64_t i = 0; i < values.size(); ++i)
    out[i] = mask[i] > 0.5 ? values[i] : 0.0;
  return out;
}
}  // namespace

Tensor State::stacked() const {
  validate();
  int dt = lr.shape(0), ny = lr.shape(1), nx = lr.shape(2);
  Tensor out({3 * dt, ny, nx});
  int64_t n = lr.size();
  std::copy(lr.data(), lr.data() + n, out.data());
  std::copy(hr_map.data(), hr_map.data() + n, out.data() + n);
  std::copy(hr_cal.data(), hr_cal.data() + n, out.data() + 2 * n);
  return out;
}

State State::from_stacked(const Tensor& stack) {
  require_shape(stack.dim() == 3 && stack.shape(0) % 3 == 0,
                "from_stacked wants (3*dt, y, x)");
  int dt = stack.shape(0) / 3, ny = stack.shape(1), nx = stack.shape(2);
  State s;
  s.lr = Tensor({dt, ny, nx});
  s.hr_map = Tensor({dt, ny, nx});
  s.hr_cal = Tensor({dt, ny, nx});
  int64_t n = s.lr.size();
  std::copy(stack.data(), stack.data() + n, s.lr.data());
  std::copy(stack.data() + n, stack.data() + 2 * n, s.hr_map.data());
  std::copy(stack.data() + 2 * n, stack.data() + 3 * n, s.hr_cal.data());
  return s;
}

Tensor State::compose_map() const {
  Tensor out(lr.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = lr[i] + hr_map[i];
  return out;
}

Tensor State::compose_cal() const {
  Tensor out(lr.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = lr[i] + hr_cal[i];
  return out;
}

ObsWindow make_window(const ObservationSet& obs, int start_idx, int len) {
  require(start_idx >= 0 && start_idx + len <= static_cast<int>(obs.days.size()),
          "make_window: window outside the observation series");
  ObsWindow w;
  w.grid = obs.grid;
  int ny = obs.grid.ny, nx = obs.grid.nx;
  int64_t plane = static_cast<int64_t>(ny) * nx;
  auto slice = [&](const Tensor& t) {
    Tensor out({len, ny, nx});
    std::copy(t.data() + start_idx * plane, t.data() + (start_idx + len) * plane, out.data());
    return out;
  };
  for (int i = 0; i < len; ++i) w.days.push_back(obs.days[start_idx + i]);
  w.y_lr = slice(obs.y_lr);
  w.mask_swot = slice(obs.mask_swot);
  w.mask_swot_nadir = slice(obs.mask_swot_nadir);
  w.y_sat = masked_fill_zero(slice(obs.y_sat), w.mask_swot_nadir);
  w.cal_ref = masked_fill_zero(slice(obs.cal_ref), w.mask_swot);
  return w;
}

namespace {
using ad::Var;

/// weight * mean of (residual^2) over mask points; zero (flagged) when the
/// mask is empty.
Var masked_quadratic(const Var& residual, const Tensor& mask, double weight, bool* empty) {
  double count = mask.sum();
  if (count <= 0) {
    if (empty) *empty = true;
    return Var::scalar(0.0);
  }
  if (empty) *empty = false;
  Var masked = ad::mul(residual, Var::constant(mask));
  return ad::scale(ad::sum_all(ad::square(masked)), weight / count);
}
}  // namespace

ad::Var obs_cost(const ad::Var& x_stack, const ObsWindow& win, const ObsCostWeights& w,
                 VarCostBreakdown* breakdown) {
  w.validate();
  const Tensor& xv = x_stack.value();
  require_shape(xv.dim() == 3 && xv.shape(0) % 3 == 0 && xv.shape(1) == win.y_lr.shape(1) &&
                    xv.shape(2) == win.y_lr.shape(2) && xv.shape(0) / 3 == win.len(),
                "obs_cost: state/window shape mismatch");
  int dt = win.len();

  Var x_lr = ad::slice_ch(x_stack, 0, dt);
  Var x_hr_map = ad::slice_ch(x_stack, dt, 2 * dt);
  Var x_hr_cal = ad::slice_ch(x_stack, 2 * dt, 3 * dt);

  Var y_lr = Var::constant(win.y_lr);
  Var y_sat = Var::constant(win.y_sat);

  Var term1 = ad::scale(ad::mean_all(ad::square(ad::sub(x_lr, y_lr))), w.lambda_lr);

  bool t2_empty = false, t3_empty = false;
  Var term2 = masked_quadratic(ad::sub(ad::add(x_lr, x_hr_map), y_sat),
                               win.mask_swot_nadir, w.lambda_map, &t2_empty);
  Var term3 = masked_quadratic(ad::sub(ad::add(x_lr, x_hr_cal), y_sat), win.mask_swot,
                               w.lambda_cal, &t3_empty);

  Var total = ad::add(ad::add(term1, term2), term3);
  if (breakdown) {
    breakdown->term1 = term1.value().item();
    breakdown->term2 = term2.value().item();
    breakdown->term3 = term3.value().item();
    breakdown->term2_empty = t2_empty;
    breakdown->term3_empty = t3_empty;
    breakdown->prior_term = 0;
    breakdown->total = total.value().item();
  }
  return total;
}

ad::Var prior_residual(const ad::Var& x_stack, const PriorOperator& phi) {
  Var phix = phi.apply(x_stack);
  if (!phix.value().same_shape(x_stack.value()))
    throw ShapeError("prior operator changed the state shape: " +
                     x_stack.value().shape_str() + " -> " + phix.value().shape_str());
  return ad::mean_all(ad::square(ad::sub(x_stack, phix)));
}

ad::Var variational_cost(const ad::Var& x_stack, const ObsWindow& win,
                         const ObsCostWeights& w, const PriorOperator& phi,
                         VarCostBreakdown* breakdown) {
  Var obs = obs_cost(x_stack, win, w, breakdown);
  Var prior = prior_residual(x_stack, phi);
  Var total = ad::add(obs, prior);
  if (breakdown) {
    breakdown->prior_term = prior.value().item();
    breakdown->total = total.value().item();
  }
  return total;
}

}  // namespace calmap
