#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "calmap/autodiff.hpp"

namespace calmap {

/// Field-to-field operator interface. Implementations must preserve the
/// input shape; trainable ones expose their parameter leaves.
class PriorOperator {
 public:
  virtual ~PriorOperator() = default;
  virtual ad::Var apply(const ad::Var& stacked) const = 0;
  virtual std::vector<ad::Var> params() const { return {}; }
};

/// Test/baseline helper wrapping an arbitrary differentiable map.
class FunctionalPrior : public PriorOperator {
 public:
  explicit FunctionalPrior(std::function<ad::Var(const ad::Var&)> f) : f_(std::move(f)) {}
  ad::Var apply(const ad::Var& x) const override { return f_(x); }

 private:
  std::function<ad::Var(const ad::Var&)> f_;
};

struct PriorArch {
  int window_len = 5;
  int components = 3;
  std::vector<int> widths = {32, 64, 128};  // encoder channels; size-1 poolings
  int kernel = 3;

  int in_channels() const { return components * window_len; }
  int depth() const { return static_cast<int>(widths.size()) - 1; }
  int down_factor() const { return 1 << depth(); }

  void validate() const;
  std::string to_json() const;
  static PriorArch from_json(const std::string& s);
};

/// Two-scale U-Net-ish operator: paired convolutions per level, average-pool
/// downsampling, bilinear upsampling with skip concatenation, tanh
/// activations and a linear output head.
class UnetPrior : public PriorOperator {
 public:
  UnetPrior(PriorArch arch, uint64_t seed);

  ad::Var apply(const ad::Var& stacked) const override;
  std::vector<ad::Var> params() const override;

  const PriorArch& arch() const { return arch_; }
  std::vector<std::pair<std::string, ad::Var>>& named_params() { return params_; }
  const std::vector<std::pair<std::string, ad::Var>>& named_params() const { return params_; }
  ad::Var param(const std::string& name) const;

 private:
  PriorArch arch_;
  std::vector<std::pair<std::string, ad::Var>> params_;
};

}  // namespace calmap
