#include "calmap/solver.hpp"

#include <cmath>

namespace calmap {

using ad::Var;

State init_state(const ObsWindow& win) {
  int dt = win.len(), ny = win.grid.ny, nx = win.grid.nx;
  State s;
  s.lr = win.y_lr.clone();
  s.hr_map = Tensor({dt, ny, nx});
  s.hr_cal = Tensor({dt, ny, nx});
  for (int64_t i = 0; i < s.lr.size(); ++i) {
    double anom = win.y_sat[i] - win.y_lr[i];
    if (win.mask_swot_nadir[i] > 0.5) s.hr_map[i] = anom;
    if (win.mask_swot[i] > 0.5) s.hr_cal[i] = anom;
  }
  return s;
}

namespace {
/// per-channel std of the gradient field, as a (C,1,1) Var
Var channel_std(const Var& g, double eps) {
  Var m = ad::channel_mean(g);
  Var msq = ad::channel_mean(ad::square(g));
  Var var = ad::sub(msq, ad::square(m));
  return ad::sqrt_(ad::add_const(var, eps * eps));
}
}  // namespace

Var solver_step(const Var& x, const Var& grad_x, SolverMemory& memory,
                const SolverConfig& cfg, const ConvLstmCell* cell) {
  cfg.validate();
  require_shape(grad_x.value().same_shape(x.value()), "solver_step: gradient shape mismatch");
  if (cfg.mode == SolverMode::plain_gd) {
    ++memory.iteration;
    return ad::sub(x, ad::scale(grad_x, cfg.step_size));
  }
  require(cell != nullptr, "learned solver mode needs a recurrent cell");
  Var g = grad_x;
  if (cfg.normalize_grad)
    g = ad::bmul(g, ad::recip(ad::add_const(channel_std(g, cfg.norm_eps), cfg.norm_eps)));
  Var update = cell->step(g, memory.h, memory.c);
  ++memory.iteration;
  return ad::sub(x, update);
}

SolveResult solve(const ObsWindow& win, const PriorOperator& phi, const ObsCostWeights& w,
                  const SolverConfig& cfg, const ConvLstmCell* cell, bool build_graph) {
  cfg.validate();
  SolveResult out;
  State s0 = init_state(win);
  Var x = Var::leaf(s0.stacked(), true);
  SolverMemory memory;  // zeros on first use

  for (int k = 0; k < cfg.n_iterations; ++k) {
    VarCostBreakdown bd;
    Var cost = variational_cost(x, win, w, phi, &bd);
    if (!std::isfinite(bd.total))
      throw DivergenceError("variational cost became non-finite at solver iteration " +
                            std::to_string(k));
    out.trace.push_back(bd);
    Var gx = ad::grad(cost, {x}, build_graph)[0];
    x = solver_step(x, gx, memory, cfg, cell);
    if (!build_graph) {
      // inference does not backpropagate; drop per-iteration graphs
      x = Var::leaf(x.value(), true);
      if (memory.h.defined()) {
        memory.h = memory.h.detach();
        memory.c = memory.c.detach();
      }
    }
  }
  VarCostBreakdown final_bd;
  variational_cost(x, win, w, phi, &final_bd);
  if (!std::isfinite(final_bd.total))
    throw DivergenceError("variational cost became non-finite after the final iteration");
  out.trace.push_back(final_bd);

  out.x_final = x;
  out.state = State::from_stacked(x.value());
  return out;
}

}  // namespace calmap
