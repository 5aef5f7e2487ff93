#include "calmap/noise.hpp"

#include <cmath>

#include "calmap/rng.hpp"
#include "json.hpp"

namespace calmap {

namespace {
constexpr double kRefDistanceKm = 60.0;

void source_to_json(nlohmann::json& j, const char* name, const ErrorSource& s) {
  j[name] = {{"amplitude_m", s.amplitude_m},
             {"corr_len_km", s.corr_len_km},
             {"enabled", s.enabled}};
}

ErrorSource source_from_json(const nlohmann::json& j, const char* name,
                             const ErrorSource& dflt) {
  if (!j.contains(name)) return dflt;
  ErrorSource s = dflt;
  const auto& v = j.at(name);
  s.amplitude_m = v.value("amplitude_m", s.amplitude_m);
  s.corr_len_km = v.value("corr_len_km", s.corr_len_km);
  s.enabled = v.value("enabled", s.enabled);
  return s;
}

/// Stationary AR(1) with unit marginal variance over the pass rows.
std::vector<double> ar1_series(RngStream& rng, int n, double step_km, double corr_len_km) {
  std::vector<double> v(n);
  if (n == 0) return v;
  double rho = std::exp(-step_km / corr_len_km);
  double renew = std::sqrt(1.0 - rho * rho);
  v[0] = rng.normal();
  for (int i = 1; i < n; ++i) v[i] = rho * v[i - 1] + renew * rng.normal();
  return v;
}

std::vector<double> scaled(std::vector<double> v, double s) {
  for (double& x : v) x *= s;
  return v;
}
}  // namespace

void ErrorSourceConfig::validate() const {
  for (const ErrorSource* s :
       {&roll, &baseline_dilation, &timing, &phase, &karin}) {
    require(s->amplitude_m >= 0, "error amplitudes must be nonnegative");
  }
  for (const ErrorSource* s : {&roll, &baseline_dilation, &timing, &phase}) {
    require(s->corr_len_km > 0, "error correlation lengths must be positive");
  }
}

std::string ErrorSourceConfig::to_json() const {
  nlohmann::json j;
  source_to_json(j, "roll", roll);
  source_to_json(j, "baseline_dilation", baseline_dilation);
  source_to_json(j, "timing", timing);
  source_to_json(j, "phase", phase);
  source_to_json(j, "karin", karin);
  return j.dump();
}

ErrorSourceConfig ErrorSourceConfig::from_json(const std::string& s) {
  ErrorSourceConfig c;
  auto j = nlohmann::json::parse(s);
  c.roll = source_from_json(j, "roll", c.roll);
  c.baseline_dilation = source_from_json(j, "baseline_dilation", c.baseline_dilation);
  c.timing = source_from_json(j, "timing", c.timing);
  c.phase = source_from_json(j, "phase", c.phase);
  c.karin = source_from_json(j, "karin", c.karin);
  return c;
}

ErrorCoefficients gen_error_coefficients(uint64_t seed, const SwathPass& pass,
                                         const ErrorSourceConfig& cfg) {
  cfg.validate();
  int n = pass.n_along();
  double step = n > 1 ? pass.along_km[1] - pass.along_km[0] : 1.0;
  RngStream base = RngStream(seed).child(0x6e6f697365ULL).child(pass.id);

  ErrorCoefficients c;
  auto coeff = [&](const ErrorSource& s, uint64_t tag, double unit_scale) {
    RngStream r = base.child(tag);
    if (!s.enabled || s.amplitude_m == 0.0) return std::vector<double>(n, 0.0);
    return scaled(ar1_series(r, n, step, s.corr_len_km), s.amplitude_m * unit_scale);
  };
  // amplitudes are quoted at the 60 km reference distance
  c.roll = coeff(cfg.roll, 1, 1.0 / kRefDistanceKm);
  c.dilation = coeff(cfg.baseline_dilation, 2, 1.0 / (kRefDistanceKm * kRefDistanceKm));
  c.timing_left = coeff(cfg.timing, 3, 1.0);
  c.timing_right = coeff(cfg.timing, 4, 1.0);
  c.phase_left = coeff(cfg.phase, 5, 1.0 / kRefDistanceKm);
  c.phase_right = coeff(cfg.phase, 6, 1.0 / kRefDistanceKm);
  return c;
}

ErrorRealization render_error_field(const ErrorCoefficients& coeffs, const SwathPass& pass,
                                    const ErrorSourceConfig& cfg, uint64_t seed) {
  int n = pass.n_along(), m = pass.n_across();
  require_shape(static_cast<int>(coeffs.roll.size()) == n,
                "render_error_field: coefficient length does not match the pass");

  ErrorRealization r;
  r.coeffs = coeffs;
  r.roll = Tensor({n, m});
  r.dilation = Tensor({n, m});
  r.timing = Tensor({n, m});
  r.phase = Tensor({n, m});
  r.karin = Tensor({n, m});
  r.total = Tensor({n, m});

  RngStream krng = RngStream(seed).child(0x6b6172696eULL).child(pass.id);
  double ksig = (cfg.karin.enabled ? cfg.karin.amplitude_m : 0.0);

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double x = pass.across_km[j];
      bool left = x < 0;
      r.roll.at(i, j) = coeffs.roll[i] * x;
      r.dilation.at(i, j) = coeffs.dilation[i] * x * x;
      r.timing.at(i, j) = left ? coeffs.timing_left[i] : coeffs.timing_right[i];
      r.phase.at(i, j) = (left ? coeffs.phase_left[i] : coeffs.phase_right[i]) * std::abs(x);
      r.karin.at(i, j) = ksig * krng.normal();
      r.total.at(i, j) = r.roll.at(i, j) + r.dilation.at(i, j) + r.timing.at(i, j) +
                         r.phase.at(i, j) + r.karin.at(i, j);
    }
  }
  return r;
}

Tensor corrupt_swath(const SwathPass& pass, const ErrorRealization& realization) {
  require_shape(realization.total.same_shape(pass.clean),
                "corrupt_swath: realization shape mismatch");
  Tensor out(pass.clean.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = pass.clean[i] + realization.total[i];
  return out;
}

ErrorRealization simulate_errors(uint64_t seed, const SwathPass& pass,
                                 const ErrorSourceConfig& cfg) {
  return render_error_field(gen_error_coefficients(seed, pass, cfg), pass, cfg, seed);
}

}  // namespace calmap
