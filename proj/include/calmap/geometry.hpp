#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "calmap/grid.hpp"

namespace calmap {

struct NadirConfig {
  int n_satellites = 4;
  double along_spacing_km = 6.0;
  double heading_deg = 52.0;  // from north; alternates ascending/descending
  double noise_std_m = 0.02;  // instrument noise added to nadir samples

  void validate() const {
    require(n_satellites >= 0, "nadir satellite count must be >= 0");
    require(along_spacing_km > 0, "nadir along-track spacing must be positive");
  }
};

struct SwathConfig {
  double half_width_km = 60.0;
  double gap_half_width_km = 10.0;
  double across_posting_km = 2.0;
  double along_posting_km = 2.0;
  double heading_deg = 52.0;
  int repeat_days = 1;  // one pass per repeat period

  void validate() const {
    require(gap_half_width_km < half_width_km,
            "swath gap half-width must be smaller than the half-width");
    require(across_posting_km > 0 && along_posting_km > 0,
            "swath postings must be positive");
    require(repeat_days >= 1, "swath repeat period must be >= 1 day");
  }
  int columns_per_side() const {
    return static_cast<int>(std::floor((half_width_km - gap_half_width_km) /
                                       across_posting_km)) + 1;
  }
};

struct NadirTrack {
  int day = 0;
  int sat = 0;
  std::vector<double> x_km, y_km;  // sample positions inside the domain
};

struct NadirTrackSet {
  std::vector<NadirTrack> tracks;
  double along_spacing_km = 6.0;
  int n_satellites = 4;
};

/// One wide-swath overpass in (along-track, across-track) coordinates.
/// across_km is signed, zero at nadir, the gap excluded.
struct SwathPass {
  int id = 0;
  int day = 0;
  std::vector<double> along_km;   // n_along row coordinates
  std::vector<double> across_km;  // n_across signed column offsets
  Tensor x_km, y_km;              // (n_along, n_across) positions
  Tensor clean;                   // (n_along, n_across) sampled truth (meters)

  int n_along() const { return static_cast<int>(along_km.size()); }
  int n_across() const { return static_cast<int>(across_km.size()); }
};

struct Geometry {
  GridSpec grid;
  std::vector<int> days;
  NadirTrackSet nadir;
  std::vector<SwathPass> passes;
};

/// Point observation bound for grid aggregation.
struct PointSample {
  int day = 0;
  double x_km = 0, y_km = 0;
  double value = 0;
};

/// Gridded low-resolution field, aggregated altimeter values and masks.
struct ObservationSet {
  GridSpec grid;
  std::vector<int> days;
  Tensor y_lr;              // (t,y,x) gap-free
  Tensor y_sat;             // (t,y,x), NaN outside mask_swot_nadir
  Tensor mask_swot;         // (t,y,x) 0/1, swath footprint
  Tensor mask_swot_nadir;   // (t,y,x) 0/1, union of swath and nadir footprints
  Tensor cal_ref;           // (t,y,x) clean swath truth on grid, NaN off mask_swot

  void validate() const;
};

/// Bilinear stencil between cell centers; valid=false outside the
/// interpolable region.
struct BilinearStencil {
  int iy0 = 0, ix0 = 0;
  double fy = 0, fx = 0;
  bool valid = false;

  double w00() const { return (1 - fy) * (1 - fx); }
  double w01() const { return (1 - fy) * fx; }
  double w10() const { return fy * (1 - fx); }
  double w11() const { return fy * fx; }
};

BilinearStencil bilinear_stencil(const GridSpec& grid, double x_km, double y_km);
double bilinear_sample(const Tensor& snapshot, const BilinearStencil& s);

/// Deterministic idealized tracks and passes covering [day_begin, day_end).
Geometry build_geometry(const GridSpec& grid, int day_begin, int day_end,
                        const NadirConfig& nadir_cfg, const SwathConfig& swath_cfg,
                        uint64_t seed);

/// Bilinear truth extraction at track and swath sample locations. Fills each
/// pass's clean field and returns the nadir point samples (noise-free).
struct TruthSamples {
  std::vector<PointSample> nadir;
  int excluded = 0;  // samples outside the interpolable region
};
TruthSamples sample_truth(const FieldSeries& truth, Geometry& geometry);

/// Weight-normalized bilinear splatting onto the grid.
struct GriddedObs {
  Tensor values;  // (t,y,x), NaN where no samples contribute
  Tensor mask;    // (t,y,x) 0/1
};
GriddedObs project_to_grid(const std::vector<PointSample>& samples, const GridSpec& grid,
                           const std::vector<int>& days);

/// Flatten per-pass arrays into point samples (one per retained cell).
std::vector<PointSample> swath_point_samples(const std::vector<SwathPass>& passes,
                                             const std::vector<Tensor>& values);

/// Columns kept after removing `trim` columns at both edges of each swath
/// side (ill-defined interpolation near the boundaries of the observed band).
std::vector<int> retained_columns(const SwathPass& pass, int trim);

/// Sample a gridded series back onto swath coordinates with edge trimming.
/// Output is (n_along, retained_columns) for the pass's day.
Tensor reinterp_to_swath(const FieldSeries& gridded, const SwathPass& pass, int trim = 3);

/// Same trimming applied to one of the pass's own (n_along, n_across) arrays.
Tensor trim_pass_columns(const Tensor& field, const SwathPass& pass, int trim = 3);

ObservationSet assemble_observations(const GridSpec& grid, const std::vector<int>& days,
                                     const std::vector<PointSample>& altimeter_samples,
                                     const std::vector<PointSample>& swath_samples,
                                     const std::vector<PointSample>& clean_swath_samples,
                                     const FieldSeries& y_lr);

}  // namespace calmap
