#pragma once

#include <vector>

#include "calmap/autodiff.hpp"
#include "calmap/geometry.hpp"

namespace calmap {

/// Multi-scale state over a time window: low-resolution background plus the
/// two high-resolution anomaly components (mapping and calibration).
struct State {
  Tensor lr;      // (dt, ny, nx)
  Tensor hr_map;  // (dt, ny, nx)
  Tensor hr_cal;  // (dt, ny, nx)

  int window_len() const { return lr.shape(0); }

  void validate() const {
    require_shape(lr.dim() == 3 && lr.same_shape(hr_map) && lr.same_shape(hr_cal),
                  "State components must share one (dt,y,x) shape");
    if (!lr.all_finite() || !hr_map.all_finite() || !hr_cal.all_finite())
      throw DataError("State contains non-finite values");
  }

  /// Channel stack (3*dt, ny, nx) in order [lr, hr_map, hr_cal].
  Tensor stacked() const;
  static State from_stacked(const Tensor& stack);

  Tensor compose_map() const;  // lr + hr_map
  Tensor compose_cal() const;  // lr + hr_cal
};

/// Observation window feeding one solve: tensors are (dt, ny, nx) with the
/// NaN gaps replaced by zeros (masks carry the validity).
struct ObsWindow {
  GridSpec grid;
  std::vector<int> days;
  Tensor y_lr;
  Tensor y_sat;            // zero-filled off mask_swot_nadir
  Tensor mask_swot;        // 0/1
  Tensor mask_swot_nadir;  // 0/1
  Tensor cal_ref;          // zero-filled off mask_swot

  int len() const { return static_cast<int>(days.size()); }
  int t_center() const { return len() / 2; }
};

ObsWindow make_window(const ObservationSet& obs, int start_idx, int len);

struct ObsCostWeights {
  double lambda_lr = 0.5;
  double lambda_map = 5.0;
  double lambda_cal = 5.0;

  void validate() const {
    require(lambda_lr >= 0 && lambda_map >= 0 && lambda_cal >= 0,
            "observation weights must be nonnegative");
    require(lambda_lr + lambda_map + lambda_cal > 0,
            "at least one observation weight must be positive");
  }
};

struct VarCostBreakdown {
  double term1 = 0, term2 = 0, term3 = 0, prior_term = 0, total = 0;
  bool term2_empty = false, term3_empty = false;  // masked term had no points
};

class PriorOperator;  // see prior.hpp

/// Observation term: per-term mean of squared residuals over valid points,
/// scaled by its weight. Breakdown (if given) receives the term values.
ad::Var obs_cost(const ad::Var& x_stack, const ObsWindow& win, const ObsCostWeights& w,
                 VarCostBreakdown* breakdown = nullptr);

/// Mean squared fixed-point residual ||X - phi(X)||^2 / N.
ad::Var prior_residual(const ad::Var& x_stack, const PriorOperator& phi);

/// Observation term plus prior residual; exact gradients w.r.t. the state
/// come from ad::grad on the returned scalar.
ad::Var variational_cost(const ad::Var& x_stack, const ObsWindow& win,
                         const ObsCostWeights& w, const PriorOperator& phi,
                         VarCostBreakdown* breakdown = nullptr);

}  // namespace calmap
