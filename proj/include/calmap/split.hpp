#pragma once

#include <vector>

#include "calmap/errors.hpp"

namespace calmap {

/// Train/val/test day-index partition with evolution buffers around the
/// test block.
struct SplitSpec {
  std::vector<int> train_days;
  std::vector<int> val_days;
  std::vector<int> test_days;
  int buffer_days = 10;

  void validate() const;
};

/// Centered test block of test_len days, buffer_days excluded on each side,
/// remainder split into train and val (val_frac of the remainder, taken
/// adjacent to the leading buffer so that it is not contiguous with train).
SplitSpec make_split(int n_days, int test_len, int buffer_days, double val_frac = 0.1);

}  // namespace calmap
