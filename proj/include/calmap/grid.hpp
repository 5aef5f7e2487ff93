#pragma once

#include <vector>

#include "calmap/errors.hpp"
#include "calmap/tensor.hpp"

namespace calmap {

/// Regular square lat/lon analysis grid. Cells are treated as metrically
/// square with side cell_length_m, which feeds gradient and spectral math.
struct GridSpec {
  double lat0 = 33.0;
  double lon0 = -65.0;
  double extent_deg = 9.6;
  double resolution_deg = 0.15;
  int ny = 64;
  int nx = 64;
  double cell_length_m = 16680.0;  // ~0.15 deg of latitude

  void validate() const {
    require(resolution_deg > 0, "grid resolution must be positive");
    require(cell_length_m > 0, "grid cell length must be positive");
    require(ny > 0 && nx > 0, "grid must have positive cell counts");
    double cells = extent_deg / resolution_deg;
    require(std::abs(cells - std::round(cells)) < 1e-9,
            "grid extent must be an integer number of cells");
    require(static_cast<int>(std::round(cells)) == nx &&
                static_cast<int>(std::round(cells)) == ny,
            "grid n_cells must equal extent/resolution");
  }

  static GridSpec square(double lat0, double lon0, double extent_deg,
                         double resolution_deg, double cell_length_m) {
    GridSpec g;
    g.lat0 = lat0;
    g.lon0 = lon0;
    g.extent_deg = extent_deg;
    g.resolution_deg = resolution_deg;
    g.ny = g.nx = static_cast<int>(std::round(extent_deg / resolution_deg));
    g.cell_length_m = cell_length_m;
    g.validate();
    return g;
  }

  double cell_km() const { return cell_length_m / 1000.0; }
  double domain_km() const { return nx * cell_km(); }
};

/// Daily snapshots of one scalar field on a grid.
struct FieldSeries {
  GridSpec grid;
  std::vector<int> days;  // strictly increasing, daily step
  Tensor values;          // (time, y, x)

  int n_days() const { return static_cast<int>(days.size()); }

  void validate() const {
    grid.validate();
    require(values.dim() == 3, "FieldSeries values must be (time, y, x)");
    require(values.shape(0) == n_days(), "FieldSeries time dimension mismatch");
    require(values.shape(1) == grid.ny && values.shape(2) == grid.nx,
            "FieldSeries spatial dimensions mismatch");
    for (size_t i = 1; i < days.size(); ++i)
      require(days[i] == days[i - 1] + 1, "FieldSeries days must be consecutive");
    if (!values.all_finite())
      throw DataError("FieldSeries contains non-finite values");
  }

  /// Snapshot view by day value (not index); throws if absent.
  Tensor day_snapshot(int day) const {
    for (int i = 0; i < n_days(); ++i)
      if (days[i] == day) return snapshot(i);
    throw DataError("day " + std::to_string(day) + " not in series");
  }

  Tensor snapshot(int idx) const {
    Tensor s({grid.ny, grid.nx});
    const double* src = values.data() + static_cast<int64_t>(idx) * grid.ny * grid.nx;
    std::copy(src, src + static_cast<int64_t>(grid.ny) * grid.nx, s.data());
    return s;
  }

  int day_index(int day) const {
    for (int i = 0; i < n_days(); ++i)
      if (days[i] == day) return i;
    return -1;
  }
};

/// Separable gaussian blur with reflected edges; sigma in meters.
Tensor gaussian_lowpass(const Tensor& field, double sigma_m, double cell_length_m);

/// Blur every snapshot of a (time, y, x) stack spatially.
Tensor gaussian_lowpass_stack(const Tensor& stack, double sigma_m, double cell_length_m);

}  // namespace calmap
