#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "calmap/autodiff.hpp"

namespace calmap {

struct CellConfig {
  int hidden_channels = 48;
  int kernel = 3;

  void validate() const;
};

/// Convolutional LSTM over gradient fields. The linear head starts at zero
/// so an untrained solver performs identity updates.
class ConvLstmCell {
 public:
  ConvLstmCell(int io_channels, CellConfig cfg, uint64_t seed);

  /// One recurrence: consumes the (normalized) gradient field, carries
  /// (h, c), returns the state update (io_channels, H, W).
  ad::Var step(const ad::Var& input, ad::Var& h, ad::Var& c) const;

  int io_channels() const { return io_channels_; }
  const CellConfig& config() const { return cfg_; }
  std::vector<ad::Var> params() const;
  std::vector<std::pair<std::string, ad::Var>>& named_params() { return params_; }
  const std::vector<std::pair<std::string, ad::Var>>& named_params() const { return params_; }

 private:
  int io_channels_;
  CellConfig cfg_;
  std::vector<std::pair<std::string, ad::Var>> params_;
};

}  // namespace calmap
