// SPDX-License-Identifier: Apache-2.0
//
// Detection metrics and the two unsupervised baselines.
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "mmd/dataset.hpp"
#include "mmd/lfm.hpp"

namespace mmd {

/// Malicious users are the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fn + fp + tn; }
  bool operator==(const Confusion&) const = default;
};

/// Throws ShapeError when the two label vectors differ in length.
Confusion confusion(const std::vector<UserLabel>& predicted, const std::vector<UserLabel>& truth);
/// Users in `detected` count as predicted malicious. Throws ShapeError for ids
/// outside the truth vector.
Confusion confusion(const std::set<std::size_t>& detected, const std::vector<UserLabel>& truth);

/// nullopt marks an undefined value (zero denominator).
struct Rates {
  std::optional<double> sen;
  std::optional<double> spe;
  std::optional<double> f;
};

/// SEN = tp/(tp+fn), SPE = tn/(tn+fp), F = harmonic mean of the two.
Rates sen_spe_f(const Confusion& c);

/// tp / (tp + fp); nullopt when nothing was flagged.
std::optional<double> precision(const Confusion& c);

/// F-score with undefined mapped to 0, for ordering comparisons.
double f_or_zero(const Rates& r);

/// Negative-feedback counting detector. An interaction is negative when its
/// rating is <= 2 or its review score is <= 2; a user is flagged when the
/// negative fraction is >= theta. Users without interactions are normal.
std::vector<UserLabel> baseline_sod(const Dataset& data, std::span<const double> review_scores,
                                    double theta = 0.8);

struct KmeansppResult {
  std::vector<UserLabel> labels;
  std::vector<int> assignment;
  int malicious_cluster = 0;
};

/// k-means++ seeded 2-means on the rows of P (Euclidean). The malicious
/// cluster is the one with more candidates when a non-empty candidate set is
/// given, else the one with the higher mean of `user_signal` (e.g. mean gap).
/// Throws ConfigError when there are fewer than 2 users.
KmeansppResult baseline_kmeanspp(const FactorModel& factors, std::span<const double> user_signal,
                                 std::uint64_t seed, const std::set<std::size_t>* candidates = nullptr,
                                 std::size_t max_iter = 100);

/// Mean sentiment gap per user (0 for users without interactions).
std::vector<double> mean_gap_per_user(const Dataset& data, std::span<const double> rating_scores,
                                      std::span<const double> review_scores);

}  // namespace mmd
