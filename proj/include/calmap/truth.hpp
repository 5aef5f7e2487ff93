#pragma once

#include <cstdint>
#include <string>

#include "calmap/grid.hpp"

namespace calmap {

/// Target spectrum for the synthetic sea-surface-height truth. Random
/// complex modes with amplitude ~ (1+|k|L0)^(-slope/2), advanced in time by
/// slow per-mode phase rotation plus AR(1) renewal with the given e-folding
/// time, so consecutive days stay coherent.
struct SpectrumConfig {
  double slope = 4.0;                 // isotropic PSD decays ~ k^-slope past L0
  double energy_wavelength_km = 300;  // L0: energy-containing scale
  double ssh_std_m = 0.25;            // stationary field standard deviation
  double decorrelation_days = 10.0;   // AR(1) e-folding time
  double phase_rot_max = 0.19;        // |per-day mode phase rate| bound (rad)

  void validate() const {
    require(slope > 0, "spectrum slope must be positive");
    require(energy_wavelength_km > 0, "energy wavelength must be positive");
    require(ssh_std_m > 0, "ssh std must be positive");
    require(decorrelation_days > 0, "decorrelation time must be positive");
    require(phase_rot_max >= 0 && phase_rot_max < 0.3141592653589793,
            "phase rotation bound must stay well below pi");
  }

  std::string to_json() const;
  static SpectrumConfig from_json(const std::string& s);
};

/// Deterministic synthetic truth; same (seed, grid, n_days, spectrum) gives
/// bit-identical output.
FieldSeries generate_truth(uint64_t seed, const GridSpec& grid, int n_days,
                           const SpectrumConfig& spectrum);

}  // namespace calmap
