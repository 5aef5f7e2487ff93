#include "calmap/metrics.hpp"

#include <fftw3.h>

#include "fftw_lock.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "calmap/autodiff.hpp"

namespace calmap {

namespace {
constexpr double kPi = 3.14159265358979323846;

Tensor grad_amplitude(const Tensor& field, double cell_length_m) {
  double inv_h = 1.0 / cell_length_m;
  Tensor gx = ad::kern::diff_x(field, inv_h);
  Tensor gy = ad::kern::diff_y(field, inv_h);
  Tensor out(field.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::hypot(gx[i], gy[i]);
  return out;
}
}  // namespace

std::pair<double, double> mse_metrics(const Tensor& estimate, const Tensor& truth,
                                      const Tensor* mask, double cell_length_m) {
  require_shape(estimate.same_shape(truth), "mse_metrics: shape mismatch");
  if (mask) require_shape(mask->same_shape(truth), "mse_metrics: mask shape mismatch");

  Tensor ga = grad_amplitude(estimate, cell_length_m);
  Tensor gt = grad_amplitude(truth, cell_length_m);

  double se = 0, sg = 0;
  int64_t n = 0;
  for (int64_t i = 0; i < estimate.size(); ++i) {
    if (mask && (*mask)[i] <= 0.5) continue;
    double d = estimate[i] - truth[i];
    double dg = ga[i] - gt[i];
    se += d * d;
    sg += dg * dg;
    ++n;
  }
  if (n == 0) throw DataError("mse_metrics: empty evaluation mask");
  return {se / n, sg / n};
}

Psd psd_1d(const std::vector<std::vector<double>>& profiles, double spacing_km) {
  require(!profiles.empty(), "psd_1d: no profiles");
  size_t raw_len = profiles[0].size();
  for (const auto& p : profiles)
    require(p.size() == raw_len, "psd_1d: profiles must share one length");
  int n = static_cast<int>(raw_len - raw_len % 2);  // even length
  if (n < 8) throw DataError("psd_1d: profiles shorter than 8 samples");

  std::vector<double> window(n);
  double wsum2 = 0;
  for (int i = 0; i < n; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (n - 1));
    wsum2 += window[i] * window[i];
  }
  (void)wsum2;

  int nf = n / 2;
  Psd out;
  out.wavelength_km.resize(nf);
  out.density.assign(nf, 0.0);
  for (int j = 1; j <= nf; ++j)
    out.wavelength_km[j - 1] = (n * spacing_km) / j;

  std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
  std::vector<double> in(n);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(),
                                        reinterpret_cast<fftw_complex*>(spec.data()),
                                        FFTW_ESTIMATE);

  double df = 1.0 / (n * spacing_km);
  for (const auto& p : profiles) {
    // linear detrend (least squares)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
      sx += i;
      sy += p[i];
      sxx += static_cast<double>(i) * i;
      sxy += i * p[i];
    }
    double denom = n * sxx - sx * sx;
    double slope = denom != 0 ? (n * sxy - sx * sy) / denom : 0.0;
    double icept = (sy - slope * sx) / n;
    for (int i = 0; i < n; ++i) in[i] = (p[i] - (icept + slope * i)) * window[i];

    fftw_execute(plan);
    for (int j = 1; j <= nf; ++j) {
      double mag2 = std::norm(spec[j]);
      double one_sided = (j == nf) ? 1.0 : 2.0;
      // P such that sum_j P_j * df = mean(v^2) of the windowed profile
      out.density[j - 1] += one_sided * mag2 / (static_cast<double>(n) * n * df);
    }
  }
  fftw_destroy_plan(plan);

  double inv = 1.0 / static_cast<double>(profiles.size());
  for (double& d : out.density) d *= inv;
  return out;
}

Psd isotropic_psd(const std::vector<Tensor>& snapshots, double cell_km) {
  require(!snapshots.empty(), "isotropic_psd: no snapshots");
  int ny = snapshots[0].shape(0), nx = snapshots[0].shape(1);
  require(ny == nx && ny >= 8, "isotropic_psd: want square snapshots of size >= 8");
  int n = ny - ny % 2;

  std::vector<double> wy(n);
  for (int i = 0; i < n; ++i) wy[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (n - 1));

  int nf = n / 2;
  std::vector<double> power(nf + 1, 0.0);
  std::vector<int64_t> count(nf + 1, 0);

  std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
  std::vector<double> in(static_cast<size_t>(n) * n);
  std::vector<std::complex<double>> spec(static_cast<size_t>(n) * (n / 2 + 1));
  fftw_plan plan = fftw_plan_dft_r2c_2d(n, n, in.data(),
                                        reinterpret_cast<fftw_complex*>(spec.data()),
                                        FFTW_ESTIMATE);

  for (const auto& snap : snapshots) {
    require_shape(snap.shape(0) == ny && snap.shape(1) == nx,
                  "isotropic_psd: inconsistent snapshot shapes");
    double mean = 0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) mean += snap.at(y, x);
    mean /= static_cast<double>(n) * n;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        in[static_cast<size_t>(y) * n + x] = (snap.at(y, x) - mean) * wy[y] * wy[x];
    fftw_execute(plan);

    for (int ky = 0; ky < n; ++ky) {
      double fy = (ky <= n / 2 ? ky : ky - n);
      for (int kx = 0; kx <= n / 2; ++kx) {
        double r = std::hypot(fy, static_cast<double>(kx));
        int bin = static_cast<int>(std::lround(r));
        if (bin < 1 || bin > nf) continue;
        double mag2 = std::norm(spec[static_cast<size_t>(ky) * (n / 2 + 1) + kx]);
        int mult = (kx == 0 || kx == n / 2) ? 1 : 2;
        power[bin] += mult * mag2;
        count[bin] += mult;
      }
    }
  }
  fftw_destroy_plan(plan);

  Psd out;
  double norm = 1.0 / (static_cast<double>(n) * n);  // relative density scale
  for (int bin = 1; bin <= nf; ++bin) {
    if (!count[bin]) continue;
    out.wavelength_km.push_back(n * cell_km / bin);
    out.density.push_back(power[bin] / count[bin] * norm / snapshots.size());
  }
  return out;
}

std::optional<double> effective_resolution(const Psd& truth_psd, const Psd& error_psd) {
  require(truth_psd.wavelength_km.size() == error_psd.wavelength_km.size() &&
              !truth_psd.wavelength_km.empty(),
          "effective_resolution: spectra must share one wavelength axis");
  for (size_t i = 0; i < truth_psd.wavelength_km.size(); ++i)
    require(std::abs(truth_psd.wavelength_km[i] - error_psd.wavelength_km[i]) <
                1e-9 * truth_psd.wavelength_km[i] + 1e-12,
            "effective_resolution: wavelength axes disagree");

  size_t nb = truth_psd.wavelength_km.size();
  auto ratio = [&](size_t j) {
    double e = error_psd.density[j];
    if (e <= 0) return std::numeric_limits<double>::infinity();
    return truth_psd.density[j] / e;
  };

  if (ratio(0) < 2.0) return std::nullopt;  // unresolved at the largest scale
  for (size_t j = 1; j < nb; ++j) {
    double r = ratio(j);
    if (r >= 2.0) continue;
    // crossing between bins j-1 and j: interpolate ratio against wavelength
    double r0 = ratio(j - 1);
    double l0 = truth_psd.wavelength_km[j - 1], l1 = truth_psd.wavelength_km[j];
    if (!std::isfinite(r0)) return l0;
    double t = (r0 - 2.0) / (r0 - r);
    return l0 + t * (l1 - l0);
  }
  return truth_psd.wavelength_km.back();  // resolved at every scale: 2*spacing
}

double psd_slope(const Psd& psd, double lambda_min_km, double lambda_max_km) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < psd.wavelength_km.size(); ++i) {
    double l = psd.wavelength_km[i];
    if (l < lambda_min_km || l > lambda_max_km || psd.density[i] <= 0) continue;
    double x = std::log(1.0 / l);
    double y = std::log(psd.density[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  require(n >= 3, "psd_slope: too few bins in the fit range");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

GridScores grid_scores(const FieldSeries& estimate, const FieldSeries& truth,
                       const std::vector<int>& eval_days) {
  GridScores out;
  double se = 0, sg = 0;
  std::vector<Tensor> truth_snaps, err_snaps;
  int n = 0;
  for (int day : eval_days) {
    int ie = estimate.day_index(day), it = truth.day_index(day);
    if (ie < 0 || it < 0) throw DataError("grid_scores: day " + std::to_string(day) +
                                          " missing from series");
    Tensor e = estimate.snapshot(ie), t = truth.snapshot(it);
    auto [mse, mseg] = mse_metrics(e, t, nullptr, truth.grid.cell_length_m);
    se += mse;
    sg += mseg;
    ++n;
    Tensor err(e.shape());
    for (int64_t i = 0; i < err.size(); ++i) err[i] = e[i] - t[i];
    truth_snaps.push_back(t);
    err_snaps.push_back(err);
  }
  require(n > 0, "grid_scores: no evaluation days");
  out.mse = se / n;
  out.mse_grad = sg / n;
  Psd pt = isotropic_psd(truth_snaps, truth.grid.cell_km());
  Psd pe = isotropic_psd(err_snaps, truth.grid.cell_km());
  out.lambda_er_km = effective_resolution(pt, pe);
  return out;
}

std::optional<SwathPsd> swath_pass_psd(const Tensor& estimate, const SwathPass& pass,
                                       int trim) {
  Tensor clean = trim_pass_columns(pass.clean, pass, trim);
  require_shape(estimate.same_shape(clean), "swath_pass_psd: estimate shape mismatch");
  int na = clean.shape(0), nc = clean.shape(1);
  if (na - na % 2 < 8) return std::nullopt;

  double along_step = pass.n_along() > 1 ? pass.along_km[1] - pass.along_km[0] : 1.0;
  std::vector<std::vector<double>> truth_profiles, err_profiles;
  for (int j = 0; j < nc; ++j) {
    std::vector<double> tp(na), ep(na);
    for (int i = 0; i < na; ++i) {
      tp[i] = clean.at(i, j);
      ep[i] = estimate.at(i, j) - clean.at(i, j);
    }
    truth_profiles.push_back(std::move(tp));
    err_profiles.push_back(std::move(ep));
  }
  SwathPsd out;
  out.truth = psd_1d(truth_profiles, along_step);
  out.error = psd_1d(err_profiles, along_step);
  return out;
}

namespace {
SwathScores score_passes(const std::vector<Tensor>& estimates,
                         const std::vector<SwathPass>& passes, int trim,
                         double along_posting_m, double across_posting_m) {
  SwathScores out;
  double se = 0, sg = 0;
  int64_t n = 0;
  std::vector<double> lambdas;

  for (size_t p = 0; p < passes.size(); ++p) {
    const SwathPass& pass = passes[p];
    Tensor clean = trim_pass_columns(pass.clean, pass, trim);
    const Tensor& est = estimates[p];
    require_shape(est.same_shape(clean), "swath_scores: estimate shape mismatch on pass " +
                                             std::to_string(pass.id));
    int na = clean.shape(0), nc = clean.shape(1);
    if (na - na % 2 < 8) {
      ++out.n_excluded;
      continue;
    }

    // gradients per swath side: columns are contiguous within a side only
    int per_side = nc / 2;
    for (int side = 0; side < 2; ++side) {
      Tensor eside({na, per_side}), tside({na, per_side});
      for (int i = 0; i < na; ++i)
        for (int j = 0; j < per_side; ++j) {
          eside.at(i, j) = est.at(i, side * per_side + j);
          tside.at(i, j) = clean.at(i, side * per_side + j);
        }
      // anisotropic spacing: scale columns so diff_x uses across posting
      Tensor gex = ad::kern::diff_x(eside, 1.0 / across_posting_m);
      Tensor gey = ad::kern::diff_y(eside, 1.0 / along_posting_m);
      Tensor gtx = ad::kern::diff_x(tside, 1.0 / across_posting_m);
      Tensor gty = ad::kern::diff_y(tside, 1.0 / along_posting_m);
      for (int64_t i = 0; i < eside.size(); ++i) {
        double d = eside[i] - tside[i];
        double dg = std::hypot(gex[i], gey[i]) - std::hypot(gtx[i], gty[i]);
        se += d * d;
        sg += dg * dg;
        ++n;
      }
    }

    auto psd = swath_pass_psd(est, pass, trim);
    if (!psd) {
      ++out.n_excluded;
      continue;
    }
    auto lam = effective_resolution(psd->truth, psd->error);
    ++out.n_passes;
    if (lam)
      lambdas.push_back(*lam);
    else
      ++out.n_unresolved;
  }

  if (n == 0) throw DataError("swath_scores: no usable passes");
  out.mse = se / static_cast<double>(n);
  out.mse_grad = sg / static_cast<double>(n);
  if (!lambdas.empty()) {
    double m = 0;
    for (double l : lambdas) m += l;
    m /= static_cast<double>(lambdas.size());
    double v = 0;
    for (double l : lambdas) v += (l - m) * (l - m);
    out.lambda_mean_km = m;
    out.lambda_std_km = std::sqrt(v / static_cast<double>(lambdas.size()));
  }
  return out;
}

std::pair<double, double> pass_postings_m(const std::vector<SwathPass>& passes) {
  for (const auto& p : passes) {
    if (p.n_along() > 1 && p.n_across() > 1) {
      double along = (p.along_km[1] - p.along_km[0]) * 1000.0;
      double across = std::abs(p.across_km[1] - p.across_km[0]) * 1000.0;
      return {along, across};
    }
  }
  return {1000.0, 1000.0};
}
}  // namespace

SwathScores swath_scores(const FieldSeries& estimate, const std::vector<SwathPass>& passes,
                         int trim) {
  std::vector<Tensor> est;
  est.reserve(passes.size());
  for (const auto& p : passes) est.push_back(reinterp_to_swath(estimate, p, trim));
  return swath_scores_values(est, passes, trim);
}

SwathScores swath_scores_values(const std::vector<Tensor>& estimates,
                                const std::vector<SwathPass>& passes, int trim) {
  require(estimates.size() == passes.size(), "swath_scores: estimate/pass count mismatch");
  auto [along_m, across_m] = pass_postings_m(passes);
  return score_passes(estimates, passes, trim, along_m, across_m);
}

}  // namespace calmap
