#include "calmap/truth.hpp"

#include <fftw3.h>

#include "fftw_lock.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "calmap/rng.hpp"
#include "json.hpp"

namespace calmap {

std::string SpectrumConfig::to_json() const {
  nlohmann::json j;
  j["slope"] = slope;
  j["energy_wavelength_km"] = energy_wavelength_km;
  j["ssh_std_m"] = ssh_std_m;
  j["decorrelation_days"] = decorrelation_days;
  j["phase_rot_max"] = phase_rot_max;
  return j.dump();
}

SpectrumConfig SpectrumConfig::from_json(const std::string& s) {
  SpectrumConfig c;
  auto j = nlohmann::json::parse(s);
  c.slope = j.value("slope", c.slope);
  c.energy_wavelength_km = j.value("energy_wavelength_km", c.energy_wavelength_km);
  c.ssh_std_m = j.value("ssh_std_m", c.ssh_std_m);
  c.decorrelation_days = j.value("decorrelation_days", c.decorrelation_days);
  c.phase_rot_max = j.value("phase_rot_max", c.phase_rot_max);
  return c;
}

FieldSeries generate_truth(uint64_t seed, const GridSpec& grid, int n_days,
                           const SpectrumConfig& spectrum) {
  grid.validate();
  spectrum.validate();
  require(n_days >= 1, "generate_truth: n_days must be at least 1");
  require(grid.domain_km() >= 2.0 * spectrum.energy_wavelength_km,
          "generate_truth: domain (" + std::to_string(grid.domain_km()) +
              " km) smaller than twice the energy wavelength; spectrum unresolvable");

  const int ny = grid.ny, nx = grid.nx;
  const int hx = nx / 2 + 1;
  const double cell_km = grid.cell_km();
  const double l0 = spectrum.energy_wavelength_km;

  // mode amplitudes ~ (1 + |f| L0)^(-slope/2), multiplicity-aware normalization
  std::vector<double> amp(static_cast<size_t>(ny) * hx, 0.0);
  double total_var = 0.0;
  for (int ky = 0; ky < ny; ++ky) {
    double fy = (ky <= ny / 2 ? ky : ky - ny) / (ny * cell_km);
    for (int kx = 0; kx < hx; ++kx) {
      if (ky == 0 && kx == 0) continue;  // DC stays zero: zero-mean field
      double fx = kx / (nx * cell_km);
      double f = std::hypot(fy, fx);
      double a = std::pow(1.0 + f * l0, -0.5 * spectrum.slope);
      amp[static_cast<size_t>(ky) * hx + kx] = a;
      int mult = (kx == 0 || (nx % 2 == 0 && kx == nx / 2)) ? 1 : 2;
      total_var += mult * a * a;
    }
  }
  double norm = spectrum.ssh_std_m / std::sqrt(total_var);
  for (double& a : amp) a *= norm;

  // independent modes: full ky range for 0 < kx < nx/2; for the kx==0 and
  // kx==nx/2 columns only ky in [0, ny/2] is free, the rest follows by
  // conjugate symmetry so the inverse transform is real
  auto self_conjugate = [&](int ky, int kx) {
    bool edge_x = (kx == 0) || (nx % 2 == 0 && kx == nx / 2);
    bool edge_y = (ky == 0) || (ny % 2 == 0 && ky == ny / 2);
    return edge_x && edge_y;
  };
  auto mirrored = [&](int ky, int kx) {
    bool edge_x = (kx == 0) || (nx % 2 == 0 && kx == nx / 2);
    return edge_x && ky > ny / 2;
  };

  RngStream init_rng = RngStream(seed).child(0x747275746830ULL);
  RngStream evo_rng = RngStream(seed).child(0x747275746831ULL);

  std::vector<std::complex<double>> coeff(static_cast<size_t>(ny) * hx);
  std::vector<double> omega(static_cast<size_t>(ny) * hx, 0.0);
  const double inv_sqrt2 = 0.70710678118654752440;
  for (int ky = 0; ky < ny; ++ky)
    for (int kx = 0; kx < hx; ++kx) {
      size_t i = static_cast<size_t>(ky) * hx + kx;
      if (amp[i] == 0.0 || mirrored(ky, kx)) continue;
      double re = init_rng.normal(), im = init_rng.normal();
      if (self_conjugate(ky, kx)) {
        coeff[i] = {amp[i] * re, 0.0};
      } else {
        coeff[i] = {amp[i] * re * inv_sqrt2, amp[i] * im * inv_sqrt2};
      }
      omega[i] = init_rng.uniform(-spectrum.phase_rot_max, spectrum.phase_rot_max);
    }

  const double rho = std::exp(-1.0 / spectrum.decorrelation_days);
  const double renew = std::sqrt(1.0 - rho * rho);

  FieldSeries out;
  out.grid = grid;
  out.days.resize(n_days);
  for (int t = 0; t < n_days; ++t) out.days[t] = t;
  out.values = Tensor({n_days, ny, nx});

  std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
  fftw_complex* in = fftw_alloc_complex(static_cast<size_t>(ny) * hx);
  double* space = fftw_alloc_real(static_cast<size_t>(ny) * nx);
  fftw_plan plan = fftw_plan_dft_c2r_2d(ny, nx, in, space, FFTW_ESTIMATE);

  for (int t = 0; t < n_days; ++t) {
    if (t > 0) {
      for (int ky = 0; ky < ny; ++ky)
        for (int kx = 0; kx < hx; ++kx) {
          size_t i = static_cast<size_t>(ky) * hx + kx;
          if (amp[i] == 0.0 || mirrored(ky, kx)) continue;
          double re = evo_rng.normal(), im = evo_rng.normal();
          std::complex<double> rot(std::cos(omega[i]), std::sin(omega[i]));
          if (self_conjugate(ky, kx)) {
            coeff[i] = {rho * coeff[i].real() + renew * amp[i] * re, 0.0};
          } else {
            std::complex<double> xi(re * inv_sqrt2, im * inv_sqrt2);
            coeff[i] = rho * rot * coeff[i] + renew * amp[i] * xi;
          }
        }
    }
    // fill mirrored entries of the edge columns, then invert
    for (int ky = 0; ky < ny; ++ky)
      for (int kx = 0; kx < hx; ++kx) {
        size_t i = static_cast<size_t>(ky) * hx + kx;
        std::complex<double> c = coeff[i];
        if (mirrored(ky, kx)) c = std::conj(coeff[static_cast<size_t>(ny - ky) * hx + kx]);
        in[i][0] = c.real();
        in[i][1] = c.imag();
      }
    fftw_execute(plan);
    double* dst = out.values.data() + static_cast<int64_t>(t) * ny * nx;
    std::copy(space, space + static_cast<size_t>(ny) * nx, dst);
  }

  fftw_destroy_plan(plan);
  fftw_free(in);
  fftw_free(space);

  out.validate();
  return out;
}

}  // namespace calmap
