#include "calmap/oi.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace calmap {

namespace {
constexpr double kPi = 3.14159265358979323846;

double corr(double d, double len, CovarianceFamily family) {
  double r = d / len;
  return family == CovarianceFamily::gaussian ? std::exp(-0.5 * r * r) : std::exp(-r);
}
}  // namespace

std::string OICovarianceConfig::to_json() const {
  nlohmann::json j;
  j["space_corr_km"] = space_corr_km;
  j["time_corr_days"] = time_corr_days;
  j["signal_var_m2"] = signal_var_m2;
  j["noise_var_m2"] = noise_var_m2;
  j["family"] = family == CovarianceFamily::gaussian ? "gaussian" : "exponential";
  j["tile_factor"] = tile_factor;
  j["max_obs_per_tile"] = max_obs_per_tile;
  return j.dump();
}

OICovarianceConfig OICovarianceConfig::from_json(const std::string& s) {
  OICovarianceConfig c;
  auto j = nlohmann::json::parse(s);
  c.space_corr_km = j.value("space_corr_km", c.space_corr_km);
  c.time_corr_days = j.value("time_corr_days", c.time_corr_days);
  c.signal_var_m2 = j.value("signal_var_m2", c.signal_var_m2);
  c.noise_var_m2 = j.value("noise_var_m2", c.noise_var_m2);
  std::string fam = j.value("family", std::string("gaussian"));
  c.family = fam == "exponential" ? CovarianceFamily::exponential : CovarianceFamily::gaussian;
  c.tile_factor = j.value("tile_factor", c.tile_factor);
  c.max_obs_per_tile = j.value("max_obs_per_tile", c.max_obs_per_tile);
  return c;
}

FieldSeries oi_solve(const std::vector<PointSample>& samples, const GridSpec& grid,
                     const std::vector<int>& days, const OICovarianceConfig& cfg,
                     OIReport* report) {
  grid.validate();
  cfg.validate();
  require(!days.empty(), "oi_solve: no target days");

  FieldSeries out;
  out.grid = grid;
  out.days = days;
  out.values = Tensor({static_cast<int>(days.size()), grid.ny, grid.nx});
  if (samples.empty()) return out;  // prior mean: zero field

  double signal_var = cfg.signal_var_m2;
  if (signal_var <= 0) {
    double m = 0, v = 0;
    for (const auto& s : samples) m += s.value;
    m /= static_cast<double>(samples.size());
    for (const auto& s : samples) v += (s.value - m) * (s.value - m);
    signal_var = std::max(v / static_cast<double>(samples.size()), 1e-12);
  }

  double cell = grid.cell_km();
  double domain = grid.domain_km();
  double tile_space = cfg.tile_factor * cfg.space_corr_km;
  double tile_time = cfg.tile_factor * cfg.time_corr_days;
  double step_space = 0.5 * tile_space;
  double step_time = std::max(1.0, 0.5 * tile_time);
  int nsx = std::max(1, static_cast<int>(std::ceil(domain / step_space)) - 1);
  int day_lo = days.front(), day_hi = days.back();
  int nst = std::max(1, static_cast<int>(std::ceil((day_hi - day_lo + 1) / step_time)));

  Tensor wacc({static_cast<int>(days.size()), grid.ny, grid.nx});
  Tensor macc({static_cast<int>(days.size()), grid.ny, grid.nx});

  OIReport rep;
  double margin_space = cfg.space_corr_km;
  double margin_time = cfg.time_corr_days;

  for (int tt = 0; tt < nst; ++tt) {
    double t0 = day_lo + tt * step_time;
    double t1 = std::min(static_cast<double>(day_hi), t0 + tile_time);
    for (int ty = 0; ty < nsx; ++ty) {
      double y0 = ty * step_space;
      double y1 = std::min(domain, y0 + tile_space);
      for (int tx = 0; tx < nsx; ++tx) {
        double x0 = tx * step_space;
        double x1 = std::min(domain, x0 + tile_space);

        // observations inside the tile plus one correlation length of margin
        std::vector<const PointSample*> obs;
        for (const auto& s : samples) {
          if (s.x_km < x0 - margin_space || s.x_km > x1 + margin_space) continue;
          if (s.y_km < y0 - margin_space || s.y_km > y1 + margin_space) continue;
          if (s.day < t0 - margin_time || s.day > t1 + margin_time) continue;
          obs.push_back(&s);
        }
        if (obs.empty()) continue;
        if (static_cast<int>(obs.size()) > cfg.max_obs_per_tile) {
          // deterministic stride thinning
          std::vector<const PointSample*> kept;
          double stride = static_cast<double>(obs.size()) / cfg.max_obs_per_tile;
          for (int i = 0; i < cfg.max_obs_per_tile; ++i)
            kept.push_back(obs[static_cast<size_t>(i * stride)]);
          obs = std::move(kept);
          ++rep.thinned_tiles;
        }

        int m = static_cast<int>(obs.size());
        rep.max_system = std::max<int64_t>(rep.max_system, m);
        Eigen::MatrixXd k(m, m);
        Eigen::VectorXd y(m);
        for (int i = 0; i < m; ++i) {
          y(i) = obs[i]->value;
          for (int j = i; j < m; ++j) {
            double ds = std::hypot(obs[i]->x_km - obs[j]->x_km, obs[i]->y_km - obs[j]->y_km);
            double dt = std::abs(obs[i]->day - obs[j]->day);
            double v = signal_var * corr(ds, cfg.space_corr_km, cfg.family) *
                       corr(dt, cfg.time_corr_days, cfg.family);
            k(i, j) = v;
            k(j, i) = v;
          }
          k(i, i) += cfg.noise_var_m2;
        }

        Eigen::LLT<Eigen::MatrixXd> llt(k);
        if (llt.info() != Eigen::Success || cfg.noise_var_m2 == 0.0) {
          for (int i = 0; i < m; ++i) k(i, i) += cfg.jitter_rel * signal_var;
          llt.compute(k);
          ++rep.jittered_tiles;
          if (llt.info() != Eigen::Success)
            throw DataError("oi_solve: covariance system not positive definite");
        }
        Eigen::VectorXd alpha = llt.solve(y);
        ++rep.tiles;

        // evaluate the posterior on tile grid nodes with cosine blending
        int ix0 = std::max(0, static_cast<int>(std::floor(x0 / cell - 0.5)));
        int ix1 = std::min(grid.nx - 1, static_cast<int>(std::ceil(x1 / cell - 0.5)));
        int iy0 = std::max(0, static_cast<int>(std::floor(y0 / cell - 0.5)));
        int iy1 = std::min(grid.ny - 1, static_cast<int>(std::ceil(y1 / cell - 0.5)));
        double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1), ct = 0.5 * (t0 + t1);
        double hx = std::max(0.5 * (x1 - x0), 1e-9), hy = std::max(0.5 * (y1 - y0), 1e-9);
        double ht = std::max(0.5 * (t1 - t0), 0.5);

        for (size_t ti = 0; ti < days.size(); ++ti) {
          double day = days[ti];
          if (day < t0 || day > t1) continue;
          double wt = std::cos(0.5 * kPi * std::min(1.0, std::abs(day - ct) / ht));
          wt = std::max(wt * wt, 1e-6);
          for (int iy = iy0; iy <= iy1; ++iy) {
            double py = (iy + 0.5) * cell;
            double wy = std::cos(0.5 * kPi * std::min(1.0, std::abs(py - cy) / hy));
            wy = std::max(wy * wy, 1e-6);
            for (int ix = ix0; ix <= ix1; ++ix) {
              double px = (ix + 0.5) * cell;
              double wx = std::cos(0.5 * kPi * std::min(1.0, std::abs(px - cx) / hx));
              wx = std::max(wx * wx, 1e-6);
              double mean = 0;
              for (int i = 0; i < m; ++i) {
                double ds = std::hypot(px - obs[i]->x_km, py - obs[i]->y_km);
                double dt = std::abs(day - obs[i]->day);
                mean += alpha(i) * signal_var * corr(ds, cfg.space_corr_km, cfg.family) *
                        corr(dt, cfg.time_corr_days, cfg.family);
              }
              double wgt = wt * wy * wx;
              wacc.at(static_cast<int>(ti), iy, ix) += wgt;
              macc.at(static_cast<int>(ti), iy, ix) += wgt * mean;
            }
          }
        }
      }
    }
  }

  for (int64_t i = 0; i < out.values.size(); ++i)
    out.values[i] = wacc[i] > 0 ? macc[i] / wacc[i] : 0.0;

  if (report) *report = rep;
  out.validate();
  return out;
}

FieldSeries make_lowres(const std::vector<PointSample>& nadir_samples, const GridSpec& grid,
                        const std::vector<int>& days, const OICovarianceConfig& cfg,
                        double lowpass_sigma_m) {
  FieldSeries oi = oi_solve(nadir_samples, grid, days, cfg);
  oi.values = gaussian_lowpass_stack(oi.values, lowpass_sigma_m, grid.cell_length_m);
  return oi;
}

}  // namespace calmap
