#pragma once

#include <random>
#include <vector>

#include "odbguard/trace.hpp"

namespace bench {

// Two-regime regression data with x ~ N(0, I), a stand-in for aligned drives.
inline std::vector<odbguard::AlignedRecord> mixed_records(std::size_t n, unsigned seed = 1) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<odbguard::AlignedRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = out[i];
    r.t = static_cast<std::int64_t>(i);
    for (auto& x : r.x) x = z(gen);
    const double slope = i % 3 == 0 ? -1.0 : 1.0;
    r.y = slope * r.x[0] + 0.2 * r.x[1] + 0.3 * z(gen);
  }
  return out;
}

}  // namespace bench
