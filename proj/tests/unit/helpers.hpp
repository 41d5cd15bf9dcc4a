#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mia/core.hpp"
#include "mia/rng.hpp"

namespace testing {

inline std::filesystem::path data_dir() { return MIA_TEST_DATA_DIR; }

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mia-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Random TokenScores with `n` tokens; logprobs in [-12, -1e-3], stats optional.
inline mia::TokenScores random_scores(mia::Rng& rng, std::size_t n, bool stats = false) {
  mia::TokenScores ts;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ts.tokens.push_back("t" + std::to_string(i));
    ts.logprobs.push_back(-1e-3 - 12.0 * rng.uniform01());
    ts.char_offsets.emplace_back(pos, pos + ts.tokens.back().size());
    pos += ts.tokens.back().size() + 1;
  }
  if (stats) {
    ts.dist_mean.emplace();
    ts.dist_std.emplace();
    for (std::size_t i = 0; i < n; ++i) {
      ts.dist_mean->push_back(-8.0 * rng.uniform01());
      ts.dist_std->push_back(rng.uniform01() < 0.1 ? 0.0 : 3.0 * rng.uniform01());
    }
  }
  return ts;
}

inline std::vector<double> random_values(mia::Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> out(n);
  for (double& v : out) v = lo + (hi - lo) * rng.uniform01();
  return out;
}

}  // namespace testing
