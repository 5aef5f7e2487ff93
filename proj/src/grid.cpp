#include "calmap/grid.hpp"

#include <cmath>

namespace calmap {

namespace {
std::vector<double> gaussian_kernel(double sigma_cells) {
  int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_cells)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    double v = std::exp(-0.5 * (i * i) / (sigma_cells * sigma_cells));
    k[i + radius] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}
}  // namespace

Tensor gaussian_lowpass(const Tensor& field, double sigma_m, double cell_length_m) {
  if (field.dim() != 2) throw ShapeError("gaussian_lowpass wants (y, x)");
  double sigma_cells = sigma_m / cell_length_m;
  if (sigma_cells <= 0) return field.clone();
  auto k = gaussian_kernel(sigma_cells);
  int radius = static_cast<int>(k.size()) / 2;
  int ny = field.shape(0), nx = field.shape(1);

  Tensor tmp({ny, nx});
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      double s = 0;
      for (int j = -radius; j <= radius; ++j) s += k[j + radius] * field.at(y, reflect(x + j, nx));
      tmp.at(y, x) = s;
    }
  Tensor out({ny, nx});
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      double s = 0;
      for (int j = -radius; j <= radius; ++j) s += k[j + radius] * tmp.at(reflect(y + j, ny), x);
      out.at(y, x) = s;
    }
  return out;
}

Tensor gaussian_lowpass_stack(const Tensor& stack, double sigma_m, double cell_length_m) {
  if (stack.dim() != 3) throw ShapeError("gaussian_lowpass_stack wants (t, y, x)");
  Tensor out(stack.shape());
  int nt = stack.shape(0), ny = stack.shape(1), nx = stack.shape(2);
  for (int t = 0; t < nt; ++t) {
    Tensor snap({ny, nx});
    const double* src = stack.data() + static_cast<int64_t>(t) * ny * nx;
    std::copy(src, src + static_cast<int64_t>(ny) * nx, snap.data());
    Tensor blurred = gaussian_lowpass(snap, sigma_m, cell_length_m);
    std::copy(blurred.data(), blurred.data() + blurred.size(),
              out.data() + static_cast<int64_t>(t) * ny * nx);
  }
  return out;
}

}  // namespace calmap
