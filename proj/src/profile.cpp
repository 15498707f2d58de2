// SPDX-License-Identifier: Apache-2.0
#include "mmd/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mmd/error.hpp"

namespace mmd {

double sentiment_gap(double rating_score, double review_score) {
  const auto in_range = [](double s) { return s >= 1.0 && s <= 5.0; };
  if (!in_range(rating_score) || !in_range(review_score))
    throw Error("sentiment scores must lie in [1,5]");
  return std::abs(rating_score - review_score);
}

GapVector gap_vector(std::span<const double> gaps, std::size_t k, std::size_t user) {
  if (k == 0) throw ConfigError("gap vector dimension must be >= 1");
  std::vector<double> sorted(gaps.begin(), gaps.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  GapVector out;
  out.user = user;
  out.support = std::min(k, sorted.size());
  out.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < out.support; ++j) out.values(static_cast<Eigen::Index>(j)) = sorted[j];
  return out;
}

std::vector<double> interaction_gaps(std::span<const double> rating_scores,
                                     std::span<const double> review_scores) {
  if (rating_scores.size() != review_scores.size())
    throw Error("every interaction needs both a rating and a review score");
  std::vector<double> out(rating_scores.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = sentiment_gap(rating_scores[k], review_scores[k]);
  return out;
}

std::vector<std::vector<double>> gaps_by_user(const Dataset& data, std::span<const double> gaps) {
  if (gaps.size() != data.interactions.size()) throw Error("gap count does not match interactions");
  std::vector<std::vector<double>> out(data.m);
  for (std::size_t k = 0; k < gaps.size(); ++k) out[data.interactions[k].user].push_back(gaps[k]);
  return out;
}

CandidateSet candidate_set_from_gaps(const std::vector<std::vector<double>>& user_gaps,
                                     double alpha_g, double theta_mu) {
  CandidateSet out;
  out.alpha_g = alpha_g;
  out.theta_mu = theta_mu;
  for (std::size_t u = 0; u < user_gaps.size(); ++u) {
    const auto& g = user_gaps[u];
    if (g.empty()) continue;
    const auto hits = std::count_if(g.begin(), g.end(), [&](double v) { return v >= alpha_g; });
    // compare counts rather than fractions so 7/10 >= 0.7 holds exactly
    if (static_cast<double>(hits) >= theta_mu * static_cast<double>(g.size()) - 1e-9)
      out.members.insert(u);
  }
  return out;
}

CandidateSet candidate_set(const Dataset& data, std::span<const double> rating_scores,
                           std::span<const double> review_scores, double alpha_g, double theta_mu) {
  return candidate_set_from_gaps(gaps_by_user(data, interaction_gaps(rating_scores, review_scores)),
                                 alpha_g, theta_mu);
}

void save_gap_vectors_csv(const Dataset& data, const std::vector<GapVector>& gaps,
                          const CandidateSet& candidates, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const std::size_t k = gaps.empty() ? 0 : static_cast<std::size_t>(gaps.front().values.size());
  out << "user,candidate,support";
  for (std::size_t j = 0; j < k; ++j) out << ",g" << j;
  out << '\n';
  out.precision(17);
  for (const auto& g : gaps) {
    out << (g.user < data.user_names.size() ? data.user_names[g.user] : std::to_string(g.user)) << ','
        << (candidates.contains(g.user) ? 1 : 0) << ',' << g.support;
    for (Eigen::Index j = 0; j < g.values.size(); ++j) out << ',' << g.values(j);
    out << '\n';
  }
}

}  // namespace mmd
