#pragma once

#include <string>
#include <vector>

#include "calmap/geometry.hpp"
#include "calmap/grid.hpp"

namespace calmap {

enum class CovarianceFamily { gaussian, exponential };

struct OICovarianceConfig {
  double space_corr_km = 150.0;
  double time_corr_days = 7.0;
  double signal_var_m2 = 0.0;   // <= 0: estimated from the observation values
  double noise_var_m2 = 4e-4;   // nadir instrument noise (0.02 m)^2
  CovarianceFamily family = CovarianceFamily::gaussian;

  // tiling keeps each linear system small; tiles span tile_factor correlation
  // lengths with 50% overlap and raised-cosine blending
  double tile_factor = 2.0;
  int max_obs_per_tile = 1200;
  double jitter_rel = 1e-8;

  void validate() const {
    require(space_corr_km > 0 && time_corr_days > 0, "OI correlation lengths must be positive");
    require(noise_var_m2 >= 0, "OI noise variance must be nonnegative");
    require(tile_factor > 0 && max_obs_per_tile > 8, "bad OI tiling parameters");
  }

  std::string to_json() const;
  static OICovarianceConfig from_json(const std::string& s);
};

struct OIReport {
  int tiles = 0;
  int jittered_tiles = 0;   // singular systems stabilized with jitter
  int thinned_tiles = 0;    // tiles that hit max_obs_per_tile
  int64_t max_system = 0;   // largest solved system
};

/// Posterior mean field with separable space-time covariance:
/// x = W H^T (H W H^T + r I)^-1 y, solved per overlapping tile.
FieldSeries oi_solve(const std::vector<PointSample>& samples, const GridSpec& grid,
                     const std::vector<int>& days, const OICovarianceConfig& cfg,
                     OIReport* report = nullptr);

/// Low-resolution background for the observation set: nadir-only OI output,
/// low-pass filtered at sigma_m.
FieldSeries make_lowres(const std::vector<PointSample>& nadir_samples, const GridSpec& grid,
                        const std::vector<int>& days, const OICovarianceConfig& cfg,
                        double lowpass_sigma_m);

}  // namespace calmap
