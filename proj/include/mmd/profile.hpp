// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mmd/dataset.hpp"

namespace mmd {

/// |s_r - s_v| for two scores in [1, 5]. Throws Error for out-of-range input.
double sentiment_gap(double rating_score, double review_score);

/// Fixed-length gap profile of one user: gaps sorted descending, truncated or
/// zero-padded to k entries. `support` counts the real entries.
struct GapVector {
  std::size_t user = 0;
  Eigen::VectorXd values;
  std::size_t support = 0;
};

GapVector gap_vector(std::span<const double> gaps, std::size_t k, std::size_t user = 0);

struct CandidateSet {
  std::set<std::size_t> members;
  double alpha_g = 3.5;
  double theta_mu = 0.7;

  bool contains(std::size_t u) const { return members.count(u) != 0; }
};

/// Per-interaction gaps in dataset order.
std::vector<double> interaction_gaps(std::span<const double> rating_scores,
                                     std::span<const double> review_scores);

/// Raw gaps grouped by user, in interaction order.
std::vector<std::vector<double>> gaps_by_user(const Dataset& data, std::span<const double> gaps);

/// u is a candidate iff |{i : g_ui >= alpha_g}| / (number of u's interactions)
/// >= theta_mu. Users without interactions are never candidates.
CandidateSet candidate_set(const Dataset& data, std::span<const double> rating_scores,
                           std::span<const double> review_scores, double alpha_g, double theta_mu);

/// Same rule applied to precomputed per-user gaps.
CandidateSet candidate_set_from_gaps(const std::vector<std::vector<double>>& user_gaps,
                                     double alpha_g, double theta_mu);

/// Audit CSV: `user,candidate,support,g0,...,g{k-1}`.
void save_gap_vectors_csv(const Dataset& data, const std::vector<GapVector>& gaps,
                          const CandidateSet& candidates, const std::filesystem::path& path);

}  // namespace mmd
