#include "calmap/split.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace calmap {

void SplitSpec::validate() const {
  std::set<int> seen;
  auto check_disjoint = [&](const std::vector<int>& v) {
    for (int d : v) {
      if (!seen.insert(d).second)
        throw ConfigError("split ranges overlap at day " + std::to_string(d));
    }
  };
  check_disjoint(train_days);
  check_disjoint(val_days);
  check_disjoint(test_days);
  for (int t : test_days)
    for (const auto* set : {&train_days, &val_days})
      for (int d : *set)
        if (std::abs(d - t) <= buffer_days)
          throw ConfigError("train/val day " + std::to_string(d) +
                            " violates the buffer around test day " + std::to_string(t));
}

SplitSpec make_split(int n_days, int test_len, int buffer_days, double val_frac) {
  require(n_days >= 1 && test_len >= 1 && buffer_days >= 0,
          "make_split: lengths must be positive");
  require(n_days >= test_len + 2 * buffer_days + 1,
          "make_split: infeasible split, need at least " +
              std::to_string(test_len + 2 * buffer_days + 1) + " days, have " +
              std::to_string(n_days));

  SplitSpec s;
  s.buffer_days = buffer_days;
  int test_begin = (n_days - test_len) / 2;
  for (int d = test_begin; d < test_begin + test_len; ++d) s.test_days.push_back(d);

  std::vector<int> leading, trailing;
  for (int d = 0; d < test_begin - buffer_days; ++d) leading.push_back(d);
  for (int d = test_begin + test_len + buffer_days; d < n_days; ++d) trailing.push_back(d);

  int remainder = static_cast<int>(leading.size() + trailing.size());
  int val_n = std::min(remainder - 1,
                       std::max(1, static_cast<int>(std::round(val_frac * remainder))));
  if (val_n < 0) val_n = 0;

  // validation block sits at the tail of the leading segment, next to the
  // buffer, so training days stay contiguous from day zero
  std::vector<int> pool = leading;
  pool.insert(pool.end(), trailing.begin(), trailing.end());
  int taken = 0;
  for (int i = static_cast<int>(leading.size()) - 1; i >= 0 && taken < val_n; --i, ++taken)
    s.val_days.push_back(leading[i]);
  for (int i = 0; i < static_cast<int>(trailing.size()) && taken < val_n; ++i, ++taken)
    s.val_days.push_back(trailing[i]);
  std::sort(s.val_days.begin(), s.val_days.end());

  std::set<int> val_set(s.val_days.begin(), s.val_days.end());
  for (int d : pool)
    if (!val_set.count(d)) s.train_days.push_back(d);
  std::sort(s.train_days.begin(), s.train_days.end());

  s.validate();
  return s;
}

}  // namespace calmap
