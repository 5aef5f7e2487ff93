#include "calmap/prior.hpp"

#include <cmath>

#include "calmap/rng.hpp"
#include "json.hpp"

namespace calmap {

using ad::Var;

void PriorArch::validate() const {
  require(window_len >= 1, "prior arch: window length must be >= 1");
  require(components >= 1, "prior arch: component count must be >= 1");
  require(depth() >= 1, "prior arch: need at least two widths (depth >= 1)");
  for (int w : widths) require(w >= 1, "prior arch: channel widths must be positive");
  require(kernel >= 1 && kernel % 2 == 1, "prior arch: kernel must be odd");
}

std::string PriorArch::to_json() const {
  nlohmann::json j;
  j["window_len"] = window_len;
  j["components"] = components;
  j["widths"] = widths;
  j["kernel"] = kernel;
  return j.dump();
}

PriorArch PriorArch::from_json(const std::string& s) {
  PriorArch a;
  auto j = nlohmann::json::parse(s);
  a.window_len = j.value("window_len", a.window_len);
  a.components = j.value("components", a.components);
  if (j.contains("widths")) a.widths = j.at("widths").get<std::vector<int>>();
  a.kernel = j.value("kernel", a.kernel);
  return a;
}

namespace {
Tensor conv_init(RngStream& rng, int cout, int cin, int k) {
  Tensor w({cout, cin, k, k});
  double fan_in = static_cast<double>(cin) * k * k;
  double fan_out = static_cast<double>(cout) * k * k;
  double std = std::sqrt(2.0 / (fan_in + fan_out));
  for (int64_t i = 0; i < w.size(); ++i) w[i] = std * rng.normal();
  return w;
}

struct Layers {
  // parameter lookup by name
  const std::vector<std::pair<std::string, Var>>* params;
  Var get(const std::string& name) const {
    for (const auto& [n, v] : *params)
      if (n == name) return v;
    throw ConfigError("prior parameter missing: " + name);
  }
  Var conv(const Var& x, const std::string& name, int pad) const {
    Var y = ad::conv2d(x, get(name + "_w"), pad);
    return ad::badd(y, get(name + "_b"));
  }
};
}  // namespace

UnetPrior::UnetPrior(PriorArch arch, uint64_t seed) : arch_(std::move(arch)) {
  arch_.validate();
  RngStream rng = RngStream(seed).child(0x756e6574ULL);
  int k = arch_.kernel;
  auto add_conv = [&](const std::string& name, int cout, int cin) {
    params_.emplace_back(name + "_w", Var::leaf(conv_init(rng, cout, cin, k), true));
    params_.emplace_back(name + "_b", Var::leaf(Tensor({cout, 1, 1}), true));
  };

  int in_ch = arch_.in_channels();
  int d = arch_.depth();
  // encoder: level 0 .. d
  add_conv("enc0a", arch_.widths[0], in_ch);
  add_conv("enc0b", arch_.widths[0], arch_.widths[0]);
  for (int l = 1; l <= d; ++l) {
    add_conv("enc" + std::to_string(l) + "a", arch_.widths[l], arch_.widths[l - 1]);
    add_conv("enc" + std::to_string(l) + "b", arch_.widths[l], arch_.widths[l]);
  }
  // decoder: level d-1 .. 0 with skip concatenation
  for (int l = d - 1; l >= 0; --l) {
    add_conv("dec" + std::to_string(l) + "a", arch_.widths[l],
             arch_.widths[l + 1] + arch_.widths[l]);
    add_conv("dec" + std::to_string(l) + "b", arch_.widths[l], arch_.widths[l]);
  }
  add_conv("head", in_ch, arch_.widths[0]);
}

std::vector<Var> UnetPrior::params() const {
  std::vector<Var> out;
  out.reserve(params_.size());
  for (const auto& [n, v] : params_) out.push_back(v);
  return out;
}

Var UnetPrior::param(const std::string& name) const {
  for (const auto& [n, v] : params_)
    if (n == name) return v;
  throw ConfigError("prior parameter missing: " + name);
}

Var UnetPrior::apply(const Var& stacked) const {
  const Tensor& xv = stacked.value();
  require_shape(xv.dim() == 3, "prior input must be (channels, y, x)");
  require_shape(xv.shape(0) == arch_.in_channels(),
                "prior input has " + std::to_string(xv.shape(0)) + " channels, expected " +
                    std::to_string(arch_.in_channels()));
  if (!xv.all_finite()) throw DataError("prior input contains non-finite values");

  int factor = arch_.down_factor();
  int h = xv.shape(1), w = xv.shape(2);
  int ph = (factor - h % factor) % factor;
  int pw = (factor - w % factor) % factor;

  Layers lay{&params_};
  Var x = stacked;
  if (ph || pw) x = ad::pad_reflect(x, (ph + 1) / 2, (pw + 1) / 2);
  // reflect padding adds symmetrically; trim any surplus row/column
  if (x.value().shape(1) != h + ph || x.value().shape(2) != w + pw)
    x = ad::crop_hw(x, 0, 0, h + ph, w + pw);

  int pad = arch_.kernel / 2;
  int d = arch_.depth();
  std::vector<Var> skips;
  Var cur = x;
  for (int l = 0; l <= d; ++l) {
    std::string tag = "enc" + std::to_string(l);
    cur = ad::tanh_(lay.conv(cur, tag + "a", pad));
    cur = ad::tanh_(lay.conv(cur, tag + "b", pad));
    if (l < d) {
      skips.push_back(cur);
      cur = ad::avgpool2(cur);
    }
  }
  for (int l = d - 1; l >= 0; --l) {
    std::string tag = "dec" + std::to_string(l);
    cur = ad::up_bilinear2(cur);
    cur = ad::concat_ch(cur, skips[l]);
    cur = ad::tanh_(lay.conv(cur, tag + "a", pad));
    cur = ad::tanh_(lay.conv(cur, tag + "b", pad));
  }
  Var out = lay.conv(cur, "head", pad);
  if (ph || pw) out = ad::crop_hw(out, 0, 0, h, w);
  return out;
}

}  // namespace calmap
