#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "calmap/geometry.hpp"

namespace calmap {

/// One structured error source. Amplitude is the marginal std in meters at
/// the 60 km reference across-track distance; for timing it applies directly
/// (constant across track) and for karin it is the per-sample std.
struct ErrorSource {
  double amplitude_m = 0.0;
  double corr_len_km = 500.0;  // along-track AR(1) e-folding length
  bool enabled = true;
};

struct ErrorSourceConfig {
  ErrorSource roll{0.15, 800.0, true};
  ErrorSource baseline_dilation{0.10, 800.0, true};
  ErrorSource timing{0.05, 600.0, true};
  ErrorSource phase{0.08, 600.0, true};
  ErrorSource karin{0.025, 0.0, true};  // corr_len unused (white)

  void validate() const;
  std::string to_json() const;
  static ErrorSourceConfig from_json(const std::string& s);
};

/// Along-track coefficient series for the deterministic sources.
struct ErrorCoefficients {
  std::vector<double> roll;          // slope per km (rendered linear in x)
  std::vector<double> dilation;      // quadratic coefficient
  std::vector<double> timing_left;   // constant per swath side
  std::vector<double> timing_right;
  std::vector<double> phase_left;    // |x|-linear per side
  std::vector<double> phase_right;
};

struct ErrorRealization {
  ErrorCoefficients coeffs;
  Tensor roll;      // each (n_along, n_across), meters
  Tensor dilation;
  Tensor timing;
  Tensor phase;
  Tensor karin;
  Tensor total;
};

/// Stationary zero-mean AR(1) series per source; deterministic in
/// (seed, pass id).
ErrorCoefficients gen_error_coefficients(uint64_t seed, const SwathPass& pass,
                                         const ErrorSourceConfig& cfg);

/// Renders the coefficient series into per-source swath error fields:
/// roll ~ x, dilation ~ x^2, timing constant per side, phase ~ |x| per side,
/// karin white gaussian.
ErrorRealization render_error_field(const ErrorCoefficients& coeffs, const SwathPass& pass,
                                    const ErrorSourceConfig& cfg, uint64_t seed);

/// clean + total error, elementwise; the pass is left untouched.
Tensor corrupt_swath(const SwathPass& pass, const ErrorRealization& realization);

/// Convenience: coefficients + rendering with one seed.
ErrorRealization simulate_errors(uint64_t seed, const SwathPass& pass,
                                 const ErrorSourceConfig& cfg);

}  // namespace calmap
