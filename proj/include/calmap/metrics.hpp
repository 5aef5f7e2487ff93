#pragma once

#include <optional>
#include <vector>

#include "calmap/geometry.hpp"
#include "calmap/grid.hpp"

namespace calmap {

/// Masked mean squared error and gradient-amplitude mean squared error.
/// Gradients are central differences in per-meter units (cell_length_m).
std::pair<double, double> mse_metrics(const Tensor& estimate, const Tensor& truth,
                                      const Tensor* mask, double cell_length_m);

struct Psd {
  std::vector<double> wavelength_km;  // descending
  std::vector<double> density;        // m^2 per (cycles/km)
};

/// Mean one-sided PSD over equal-length 1-D profiles: linear detrend, Hann
/// window, normalized so sum(density * df) matches the windowed variance.
/// Odd-length profiles drop their last sample so the shortest wavelength bin
/// is exactly twice the spacing.
Psd psd_1d(const std::vector<std::vector<double>>& profiles, double spacing_km);

/// Radially averaged (annulus-mean) 2-D PSD over snapshots; per-snapshot
/// mean removal and 2-D Hann window.
Psd isotropic_psd(const std::vector<Tensor>& snapshots, double cell_km);

/// Smallest wavelength down to which the truth spectrum stays at least twice
/// the error spectrum; nullopt when unresolved at every scale.
std::optional<double> effective_resolution(const Psd& truth_psd, const Psd& error_psd);

/// Log-log slope of density vs wavenumber over [lambda_min, lambda_max].
double psd_slope(const Psd& psd, double lambda_min_km, double lambda_max_km);

struct GridScores {
  double mse = 0;
  double mse_grad = 0;
  std::optional<double> lambda_er_km;
};

GridScores grid_scores(const FieldSeries& estimate, const FieldSeries& truth,
                       const std::vector<int>& eval_days);

struct SwathScores {
  double mse = 0;
  double mse_grad = 0;
  double lambda_mean_km = 0;
  double lambda_std_km = 0;
  int n_passes = 0;
  int n_excluded = 0;    // passes shorter than 8 along-track samples
  int n_unresolved = 0;  // passes whose ratio never reaches 2
};

/// Swath-geometry protocol: estimates re-interpolated per pass with edge
/// trimming, along-track spectra averaged per pass across retained columns.
SwathScores swath_scores(const FieldSeries& estimate, const std::vector<SwathPass>& passes,
                         int trim = 3);

/// Same protocol for estimates already in swath coordinates (one trimmed
/// array per pass, e.g. the raw corrupted observations).
SwathScores swath_scores_values(const std::vector<Tensor>& estimates,
                                const std::vector<SwathPass>& passes, int trim = 3);

/// Per-pass PSD pair (truth vs estimate error), averaged over retained
/// columns; used by swath_scores and the PSD curve reports.
struct SwathPsd {
  Psd truth;
  Psd error;
};
std::optional<SwathPsd> swath_pass_psd(const Tensor& estimate, const SwathPass& pass, int trim);

}  // namespace calmap
