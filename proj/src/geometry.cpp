#include "calmap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "calmap/rng.hpp"

namespace calmap {

namespace {
constexpr double kDegToRad = 0.017453292519943295;

struct Line {
  double px, py;  // point on line
  double dx, dy;  // unit direction
};

// parameter interval of the line inside [lo, hi]^2, empty if lo > hi
bool clip_to_box(const Line& l, double lo, double hi, double& t0, double& t1) {
  t0 = -std::numeric_limits<double>::infinity();
  t1 = std::numeric_limits<double>::infinity();
  auto slab = [&](double p, double d) {
    if (std::abs(d) < 1e-12) return p >= lo && p <= hi;
    double a = (lo - p) / d, b = (hi - p) / d;
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    return true;
  };
  if (!slab(l.px, l.dx) || !slab(l.py, l.dy)) return false;
  return t0 < t1;
}
}  // namespace

void ObservationSet::validate() const {
  grid.validate();
  auto chk = [&](const Tensor& t, const char* name) {
    require_shape(t.dim() == 3 && t.shape(0) == static_cast<int>(days.size()) &&
                      t.shape(1) == grid.ny && t.shape(2) == grid.nx,
                  std::string("ObservationSet.") + name + " has wrong shape");
  };
  chk(y_lr, "y_lr");
  chk(y_sat, "y_sat");
  chk(mask_swot, "mask_swot");
  chk(mask_swot_nadir, "mask_swot_nadir");
  chk(cal_ref, "cal_ref");
  if (!y_lr.all_finite()) throw DataError("y_lr must be gap-free");
  for (int64_t i = 0; i < y_sat.size(); ++i) {
    bool in_any = mask_swot_nadir[i] > 0.5;
    bool in_swath = mask_swot[i] > 0.5;
    if (in_swath && !in_any)
      throw DataError("mask_swot must be contained in mask_swot_nadir");
    if (in_any != std::isfinite(y_sat[i]))
      throw DataError("y_sat must be finite exactly on mask_swot_nadir");
    if (in_swath != std::isfinite(cal_ref[i]))
      throw DataError("cal_ref must be finite exactly on mask_swot");
  }
}

BilinearStencil bilinear_stencil(const GridSpec& grid, double x_km, double y_km) {
  BilinearStencil s;
  double cell = grid.cell_km();
  double px = x_km / cell - 0.5;
  double py = y_km / cell - 0.5;
  if (px < 0 || py < 0 || px > grid.nx - 1 || py > grid.ny - 1) return s;
  int ix0 = std::min(static_cast<int>(px), grid.nx - 2);
  int iy0 = std::min(static_cast<int>(py), grid.ny - 2);
  if (grid.nx == 1) ix0 = 0;
  if (grid.ny == 1) iy0 = 0;
  s.ix0 = ix0;
  s.iy0 = iy0;
  s.fx = px - ix0;
  s.fy = py - iy0;
  s.valid = true;
  return s;
}

double bilinear_sample(const Tensor& snap, const BilinearStencil& s) {
  return s.w00() * snap.at(s.iy0, s.ix0) + s.w01() * snap.at(s.iy0, s.ix0 + 1) +
         s.w10() * snap.at(s.iy0 + 1, s.ix0) + s.w11() * snap.at(s.iy0 + 1, s.ix0 + 1);
}

Geometry build_geometry(const GridSpec& grid, int day_begin, int day_end,
                        const NadirConfig& nadir_cfg, const SwathConfig& swath_cfg,
                        uint64_t seed) {
  grid.validate();
  nadir_cfg.validate();
  swath_cfg.validate();
  require(day_end > day_begin, "build_geometry: empty day range");

  double domain = grid.domain_km();
  require(2.0 * swath_cfg.half_width_km < domain,
          "swath wider than the domain (" + std::to_string(2 * swath_cfg.half_width_km) +
              " km vs " + std::to_string(domain) + " km)");

  double cell = grid.cell_km();
  double lo = 0.5 * cell + 1e-9;
  double hi = domain - 0.5 * cell - 1e-9;
  double cx = 0.5 * domain, cy = 0.5 * domain;

  Geometry geom;
  geom.grid = grid;
  for (int d = day_begin; d < day_end; ++d) geom.days.push_back(d);
  geom.nadir.along_spacing_km = nadir_cfg.along_spacing_km;
  geom.nadir.n_satellites = nadir_cfg.n_satellites;

  RngStream rng = RngStream(seed).child(0x67656f6dULL);

  auto heading_dir = [](double heading_deg, bool ascending) {
    double h = heading_deg * kDegToRad;
    return std::pair<double, double>{std::sin(h), ascending ? std::cos(h) : -std::cos(h)};
  };

  for (int d = day_begin; d < day_end; ++d) {
    for (int sat = 0; sat < nadir_cfg.n_satellites; ++sat) {
      RngStream r = rng.child(static_cast<uint64_t>(d) * 131 + sat);
      bool ascending = ((d + sat) % 2) == 0;
      auto [dx, dy] = heading_dir(nadir_cfg.heading_deg, ascending);
      double off = r.uniform(-0.35, 0.35) * domain;
      Line line{cx - off * dy, cy + off * dx, dx, dy};
      double t0, t1;
      if (!clip_to_box(line, lo, hi, t0, t1)) continue;
      NadirTrack tr;
      tr.day = d;
      tr.sat = sat;
      for (double t = t0 + 0.5 * nadir_cfg.along_spacing_km; t < t1;
           t += nadir_cfg.along_spacing_km) {
        tr.x_km.push_back(line.px + t * line.dx);
        tr.y_km.push_back(line.py + t * line.dy);
      }
      if (!tr.x_km.empty()) geom.nadir.tracks.push_back(std::move(tr));
    }
  }

  // one swath pass per repeat period, alternating ascending/descending
  int n_side = swath_cfg.columns_per_side();
  std::vector<double> across;
  for (int j = 0; j < n_side; ++j)
    across.push_back(-swath_cfg.half_width_km + j * swath_cfg.across_posting_km);
  for (int j = n_side - 1; j >= 0; --j)
    across.push_back(swath_cfg.half_width_km - j * swath_cfg.across_posting_km);

  int pass_id = 0;
  for (int d = day_begin; d < day_end; d += swath_cfg.repeat_days) {
    RngStream r = rng.child(0x9000000ULL + static_cast<uint64_t>(d));
    bool ascending = ((d / swath_cfg.repeat_days) % 2) == 0;
    auto [dx, dy] = heading_dir(swath_cfg.heading_deg, ascending);
    double off = r.uniform(-0.3, 0.3) * domain;
    for (int attempt = 0; attempt < 2; ++attempt) {
      if (attempt == 1) off = 0.0;  // guarantee coverage for extreme offsets
      Line center{cx - off * dy, cy + off * dx, dx, dy};
      // rows valid only where the whole across-track extent stays in range
      double t0 = -std::numeric_limits<double>::infinity();
      double t1 = std::numeric_limits<double>::infinity();
      bool ok = true;
      for (double side : {-swath_cfg.half_width_km, swath_cfg.half_width_km}) {
        Line edge{center.px - side * dy, center.py + side * dx, dx, dy};
        double a, b;
        if (!clip_to_box(edge, lo, hi, a, b)) {
          ok = false;
          break;
        }
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
      }
      if (!ok || t1 - t0 < swath_cfg.along_posting_km) continue;

      SwathPass p;
      p.id = pass_id;
      p.day = d;
      p.across_km = across;
      for (double t = t0 + 0.5 * swath_cfg.along_posting_km; t < t1;
           t += swath_cfg.along_posting_km)
        p.along_km.push_back(t - t0);
      int na = p.n_along(), nc = p.n_across();
      if (na < 1) continue;
      p.x_km = Tensor({na, nc});
      p.y_km = Tensor({na, nc});
      p.clean = Tensor({na, nc});
      for (int i = 0; i < na; ++i) {
        double t = t0 + p.along_km[i];
        double bx = center.px + t * dx, by = center.py + t * dy;
        for (int j = 0; j < nc; ++j) {
          p.x_km.at(i, j) = bx - across[j] * dy;
          p.y_km.at(i, j) = by + across[j] * dx;
        }
      }
      geom.passes.push_back(std::move(p));
      ++pass_id;
      break;
    }
  }
  return geom;
}

TruthSamples sample_truth(const FieldSeries& truth, Geometry& geometry) {
  truth.validate();
  TruthSamples out;
  for (const auto& tr : geometry.nadir.tracks) {
    int idx = truth.day_index(tr.day);
    if (idx < 0) throw DataError("nadir track day outside truth series");
    Tensor snap = truth.snapshot(idx);
    for (size_t i = 0; i < tr.x_km.size(); ++i) {
      BilinearStencil s = bilinear_stencil(truth.grid, tr.x_km[i], tr.y_km[i]);
      if (!s.valid) {
        ++out.excluded;
        continue;
      }
      out.nadir.push_back({tr.day, tr.x_km[i], tr.y_km[i], bilinear_sample(snap, s)});
    }
  }
  for (auto& pass : geometry.passes) {
    int idx = truth.day_index(pass.day);
    if (idx < 0) throw DataError("swath pass day outside truth series");
    Tensor snap = truth.snapshot(idx);
    for (int i = 0; i < pass.n_along(); ++i)
      for (int j = 0; j < pass.n_across(); ++j) {
        BilinearStencil s = bilinear_stencil(truth.grid, pass.x_km.at(i, j), pass.y_km.at(i, j));
        if (!s.valid) {
          ++out.excluded;
          pass.clean.at(i, j) = 0.0;
          continue;
        }
        pass.clean.at(i, j) = bilinear_sample(snap, s);
      }
  }
  return out;
}

GriddedObs project_to_grid(const std::vector<PointSample>& samples, const GridSpec& grid,
                           const std::vector<int>& days) {
  int nt = static_cast<int>(days.size());
  GriddedObs out;
  out.values = Tensor({nt, grid.ny, grid.nx});
  out.mask = Tensor({nt, grid.ny, grid.nx});
  Tensor wsum({nt, grid.ny, grid.nx});
  Tensor wvsum({nt, grid.ny, grid.nx});

  std::vector<int> day_index(days.empty() ? 0 : 1 + *std::max_element(days.begin(), days.end()), -1);
  for (int i = 0; i < nt; ++i)
    if (days[i] >= 0) day_index[days[i]] = i;

  for (const auto& s : samples) {
    if (s.day < 0 || s.day >= static_cast<int>(day_index.size())) continue;
    int t = day_index[s.day];
    if (t < 0) continue;
    BilinearStencil st = bilinear_stencil(grid, s.x_km, s.y_km);
    if (!st.valid) continue;
    const double w[4] = {st.w00(), st.w01(), st.w10(), st.w11()};
    const int iy[4] = {st.iy0, st.iy0, st.iy0 + 1, st.iy0 + 1};
    const int ix[4] = {st.ix0, st.ix0 + 1, st.ix0, st.ix0 + 1};
    for (int k = 0; k < 4; ++k) {
      if (w[k] <= 0) continue;
      wsum.at(t, iy[k], ix[k]) += w[k];
      wvsum.at(t, iy[k], ix[k]) += w[k] * s.value;
    }
  }
  for (int64_t i = 0; i < wsum.size(); ++i) {
    if (wsum[i] > 0) {
      out.values[i] = wvsum[i] / wsum[i];
      out.mask[i] = 1.0;
    } else {
      out.values[i] = std::numeric_limits<double>::quiet_NaN();
      out.mask[i] = 0.0;
    }
  }
  return out;
}

std::vector<PointSample> swath_point_samples(const std::vector<SwathPass>& passes,
                                             const std::vector<Tensor>& values) {
  require_shape(passes.size() == values.size(),
                "swath_point_samples: pass/value count mismatch");
  std::vector<PointSample> out;
  for (size_t p = 0; p < passes.size(); ++p) {
    const SwathPass& pass = passes[p];
    require_shape(values[p].same_shape(pass.clean),
                  "swath_point_samples: value shape mismatch on pass " + std::to_string(pass.id));
    for (int i = 0; i < pass.n_along(); ++i)
      for (int j = 0; j < pass.n_across(); ++j)
        out.push_back({pass.day, pass.x_km.at(i, j), pass.y_km.at(i, j), values[p].at(i, j)});
  }
  return out;
}

std::vector<int> retained_columns(const SwathPass& pass, int trim) {
  require(trim >= 0, "trim must be nonnegative");
  int nc = pass.n_across();
  int n_side = nc / 2;
  std::vector<int> cols;
  for (int side = 0; side < 2; ++side) {
    int begin = side * n_side, end = begin + n_side;
    for (int j = begin + trim; j < end - trim; ++j) cols.push_back(j);
  }
  return cols;
}

Tensor reinterp_to_swath(const FieldSeries& gridded, const SwathPass& pass, int trim) {
  int idx = gridded.day_index(pass.day);
  if (idx < 0)
    throw DataError("reinterp_to_swath: pass day " + std::to_string(pass.day) +
                    " outside the gridded series time range");
  Tensor snap = gridded.snapshot(idx);
  std::vector<int> cols = retained_columns(pass, trim);
  Tensor out({pass.n_along(), static_cast<int>(cols.size())});
  for (int i = 0; i < pass.n_along(); ++i)
    for (size_t c = 0; c < cols.size(); ++c) {
      int j = cols[c];
      BilinearStencil s = bilinear_stencil(gridded.grid, pass.x_km.at(i, j), pass.y_km.at(i, j));
      out.at(i, static_cast<int>(c)) =
          s.valid ? bilinear_sample(snap, s) : std::numeric_limits<double>::quiet_NaN();
    }
  return out;
}

Tensor trim_pass_columns(const Tensor& field, const SwathPass& pass, int trim) {
  require_shape(field.dim() == 2 && field.shape(0) == pass.n_along() &&
                    field.shape(1) == pass.n_across(),
                "trim_pass_columns: field shape must match the pass");
  std::vector<int> cols = retained_columns(pass, trim);
  Tensor out({pass.n_along(), static_cast<int>(cols.size())});
  for (int i = 0; i < pass.n_along(); ++i)
    for (size_t c = 0; c < cols.size(); ++c) out.at(i, static_cast<int>(c)) = field.at(i, cols[c]);
  return out;
}

ObservationSet assemble_observations(const GridSpec& grid, const std::vector<int>& days,
                                     const std::vector<PointSample>& altimeter_samples,
                                     const std::vector<PointSample>& swath_samples,
                                     const std::vector<PointSample>& clean_swath_samples,
                                     const FieldSeries& y_lr) {
  ObservationSet obs;
  obs.grid = grid;
  obs.days = days;
  require_shape(y_lr.values.shape(0) == static_cast<int>(days.size()) &&
                    y_lr.values.shape(1) == grid.ny && y_lr.values.shape(2) == grid.nx,
                "assemble_observations: y_lr shape mismatch");
  obs.y_lr = y_lr.values;

  std::vector<PointSample> all = altimeter_samples;
  all.insert(all.end(), swath_samples.begin(), swath_samples.end());
  GriddedObs sat = project_to_grid(all, grid, days);
  GriddedObs swath = project_to_grid(swath_samples, grid, days);
  GriddedObs clean = project_to_grid(clean_swath_samples, grid, days);

  obs.y_sat = sat.values;
  obs.mask_swot_nadir = sat.mask;
  obs.mask_swot = swath.mask;
  obs.cal_ref = clean.values;
  obs.validate();
  return obs;
}

}  // namespace calmap
