#include "calmap/convlstm.hpp"

#include <cmath>

#include "calmap/errors.hpp"
#include "calmap/rng.hpp"

namespace calmap {

using ad::Var;

void CellConfig::validate() const {
  require(hidden_channels >= 1, "cell hidden channel count must be positive");
  require(kernel >= 1 && kernel % 2 == 1, "cell kernel must be odd");
}

ConvLstmCell::ConvLstmCell(int io_channels, CellConfig cfg, uint64_t seed)
    : io_channels_(io_channels), cfg_(cfg) {
  cfg_.validate();
  require(io_channels >= 1, "cell io channel count must be positive");
  RngStream rng = RngStream(seed).child(0x6c73746dULL);

  int k = cfg_.kernel;
  int hid = cfg_.hidden_channels;
  int cin = io_channels + hid;
  Tensor gates_w({4 * hid, cin, k, k});
  double std = std::sqrt(2.0 / ((cin + 4.0 * hid) * k * k));
  for (int64_t i = 0; i < gates_w.size(); ++i) gates_w[i] = std * rng.normal();
  Tensor gates_b({4 * hid, 1, 1});
  for (int c = hid; c < 2 * hid; ++c) gates_b[c] = 1.0;  // forget-gate bias

  params_.emplace_back("gates_w", Var::leaf(std::move(gates_w), true));
  params_.emplace_back("gates_b", Var::leaf(std::move(gates_b), true));
  // zero head: fresh cells perform identity state updates
  params_.emplace_back("head_w", Var::leaf(Tensor({io_channels, hid, k, k}), true));
  params_.emplace_back("head_b", Var::leaf(Tensor({io_channels, 1, 1}), true));
}

std::vector<Var> ConvLstmCell::params() const {
  std::vector<Var> out;
  for (const auto& [n, v] : params_) out.push_back(v);
  return out;
}

Var ConvLstmCell::step(const Var& input, Var& h, Var& c) const {
  const Tensor& iv = input.value();
  require_shape(iv.dim() == 3 && iv.shape(0) == io_channels_,
                "cell input channel mismatch");
  int hid = cfg_.hidden_channels;
  if (!h.defined()) {
    h = Var::constant(Tensor({hid, iv.shape(1), iv.shape(2)}));
    c = Var::constant(Tensor({hid, iv.shape(1), iv.shape(2)}));
  }
  require_shape(h.value().shape(1) == iv.shape(1) && h.value().shape(2) == iv.shape(2),
                "cell memory spatial mismatch");

  auto get = [&](const char* name) {
    for (const auto& [n, v] : params_)
      if (n == name) return v;
    throw ConfigError(std::string("cell parameter missing: ") + name);
  };

  int pad = cfg_.kernel / 2;
  Var z = ad::concat_ch(input, h);
  Var gates = ad::badd(ad::conv2d(z, get("gates_w"), pad), get("gates_b"));
  Var gi = ad::sigmoid_(ad::slice_ch(gates, 0, hid));
  Var gf = ad::sigmoid_(ad::slice_ch(gates, hid, 2 * hid));
  Var gg = ad::tanh_(ad::slice_ch(gates, 2 * hid, 3 * hid));
  Var go = ad::sigmoid_(ad::slice_ch(gates, 3 * hid, 4 * hid));

  c = ad::add(ad::mul(gf, c), ad::mul(gi, gg));
  h = ad::mul(go, ad::tanh_(c));
  return ad::badd(ad::conv2d(h, get("head_w"), pad), get("head_b"));
}

}  // namespace calmap
