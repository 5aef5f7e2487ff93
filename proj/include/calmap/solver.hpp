#pragma once

#include <vector>

#include "calmap/convlstm.hpp"
#include "calmap/prior.hpp"
#include "calmap/state.hpp"

namespace calmap {

enum class SolverMode { learned, plain_gd };

struct SolverConfig {
  int n_iterations = 15;
  SolverMode mode = SolverMode::learned;
  double step_size = 0.1;        // plain_gd only
  bool normalize_grad = true;    // learned mode: per-channel std scaling
  double norm_eps = 1e-8;

  void validate() const {
    require(n_iterations >= 0, "solver iteration count must be >= 0");
    if (mode == SolverMode::plain_gd)
      require(step_size > 0, "plain gradient descent needs a positive step size");
  }
};

/// Recurrent carry; reset to zeros at every solve start.
struct SolverMemory {
  ad::Var h, c;
  int iteration = 0;
};

/// Observation-data initialization: raw values where available, zero
/// anomalies elsewhere.
State init_state(const ObsWindow& win);

/// One update from a precomputed cost gradient. Learned mode runs the
/// recurrent cell; plain_gd takes an explicit step.
ad::Var solver_step(const ad::Var& x, const ad::Var& grad_x, SolverMemory& memory,
                    const SolverConfig& cfg, const ConvLstmCell* cell);

struct SolveResult {
  State state;                          // final iterate
  ad::Var x_final;                      // graph-connected when build_graph
  std::vector<VarCostBreakdown> trace;  // cost before each step + final
};

/// Unrolled minimization: init_state, then n_iterations updates with the
/// exact variational-cost gradient recomputed each step. With build_graph
/// the result stays differentiable w.r.t. prior and cell parameters.
SolveResult solve(const ObsWindow& win, const PriorOperator& phi, const ObsCostWeights& w,
                  const SolverConfig& cfg, const ConvLstmCell* cell, bool build_graph);

}  // namespace calmap
