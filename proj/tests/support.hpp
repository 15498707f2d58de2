// SPDX-License-Identifier: Apache-2.0
//
// Helpers shared by the unit tests: tiny datasets, finite differences and a
// scratch directory.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mmd/dataset.hpp"
#include "mmd/rng.hpp"

namespace mmd::test {

inline RawRecord rec(std::string user, std::string item, int rating, std::string review) {
  RawRecord r;
  r.user = std::move(user);
  r.item = std::move(item);
  r.rating = rating;
  r.review = std::move(review);
  return r;
}

/// Small labeled synthetic set that keeps the generator's structure.
inline SynthConfig small_synth(std::uint64_t seed, std::size_t normal = 60, std::size_t pmu = 8) {
  SynthConfig c;
  c.n_normal = normal;
  c.n_pmu = pmu;
  c.n_items = 150;
  c.seed = seed;
  return c;
}

/// Central difference of f at x[i] with step h; x is restored.
inline double central_diff(const std::function<double()>& f, double& x, double h = 1e-6) {
  const double keep = x;
  x = keep + h;
  const double up = f();
  x = keep - h;
  const double down = f();
  x = keep;
  return (up - down) / (2 * h);
}

/// |a - b| / max(|a|, |b|, floor).
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Fresh per-test directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mmd-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::string out;
  if (FILE* f = std::fopen(p.string().c_str(), "rb")) {
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
    std::fclose(f);
  }
  return out;
}

}  // namespace mmd::test
