// SPDX-License-Identifier: Apache-2.0
//
// Classical recommenders and sampled-negative ranking evaluation.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmd/dataset.hpp"

namespace mmd {

enum class RecommenderKind { Ubcf, Ibcf, MfEals, MfBpr };

const char* to_string(RecommenderKind kind) noexcept;
RecommenderKind parse_recommender_kind(const std::string& text);

struct RecommenderConfig {
  std::size_t neighbors = 20;
  std::size_t dim = 32;
  // explicit ALS
  double als_l2 = 0.1;
  std::size_t als_iterations = 15;
  // BPR
  double bpr_lr = 0.05;
  std::size_t bpr_epochs = 30;
  double bpr_l2 = 1e-4;
  double adagrad_init = 1e-8;
  std::uint64_t seed = 5;
};

class Recommender {
 public:
  virtual ~Recommender() = default;
  /// Preference score of user u for item i; larger ranks higher.
  virtual double score(std::size_t u, std::size_t i) const = 0;
  virtual RecommenderKind kind() const = 0;
};

/// Cosine similarity of two sparse rating vectors given as (id, rating) lists
/// sorted by id. Zero when either vector is empty.
double cosine_similarity(const std::vector<std::pair<std::size_t, double>>& a,
                         const std::vector<std::pair<std::size_t, double>>& b);

/// User-based CF: each user's `neighbors` most cosine-similar other users;
/// prediction sum(sim * r) / sum(|sim|) over all neighbours, an unrated
/// item counting as r = 0.
class UserCf : public Recommender {
 public:
  UserCf(const Dataset& train, std::size_t neighbors);
  double score(std::size_t u, std::size_t i) const override;
  RecommenderKind kind() const override { return RecommenderKind::Ubcf; }
  double similarity(std::size_t u, std::size_t v) const;
  const std::vector<std::size_t>& neighbours(std::size_t u) const { return nbrs_[u]; }

 private:
  std::vector<std::vector<std::pair<std::size_t, double>>> rows_;  // per user: (item, rating)
  Eigen::MatrixXd sim_;
  std::vector<std::vector<std::size_t>> nbrs_;
};

/// Item-based CF: neighbours are the items most similar to the target item;
/// prediction is the similarity-weighted average of the user's ratings of
/// those neighbours, unrated ones counting as 0.
class ItemCf : public Recommender {
 public:
  ItemCf(const Dataset& train, std::size_t neighbors);
  double score(std::size_t u, std::size_t i) const override;
  RecommenderKind kind() const override { return RecommenderKind::Ibcf; }
  double similarity(std::size_t i, std::size_t j) const;

 private:
  std::vector<std::vector<std::pair<std::size_t, double>>> user_rows_;  // per user: (item, rating)
  Eigen::MatrixXd sim_;
  std::vector<std::vector<std::size_t>> nbrs_;
};

/// Latent factors scored as p_u . q_i (+ item bias for BPR).
class FactorRecommender : public Recommender {
 public:
  FactorRecommender(RecommenderKind kind, Eigen::MatrixXd P, Eigen::MatrixXd Q, Eigen::VectorXd bias);
  double score(std::size_t u, std::size_t i) const override;
  RecommenderKind kind() const override { return kind_; }
  const Eigen::MatrixXd& P() const { return P_; }
  const Eigen::MatrixXd& Q() const { return Q_; }

 private:
  RecommenderKind kind_;
  Eigen::MatrixXd P_, Q_;
  Eigen::VectorXd bias_;
};

/// Explicit-rating alternating least squares with L2.
std::unique_ptr<FactorRecommender> train_als(const Dataset& train, const RecommenderConfig& config);
/// Pairwise ranking with one sampled negative per observed pair, Adagrad steps.
/// Throws TrainingError on divergence.
std::unique_ptr<FactorRecommender> train_bpr(const Dataset& train, const RecommenderConfig& config);

/// Throws Error for an empty training set.
std::unique_ptr<Recommender> train_recommender(RecommenderKind kind, const Dataset& train,
                                               const RecommenderConfig& config);

struct RankRecord {
  std::size_t user = 0;
  std::size_t item = 0;
  std::size_t rank = 0;  // 1-based among positive + sampled negatives
};

struct RankingResult {
  std::vector<std::size_t> n_list;
  std::vector<double> hr;    // per N
  std::vector<double> ndcg;  // per N
  std::vector<RankRecord> records;
  /// Test positives skipped because the user had no unseen item.
  std::size_t skipped = 0;
};

/// 1/log2(rank + 1) if rank <= n, else 0.
double ndcg_contribution(std::size_t rank, std::size_t n);

/// Ranks every test interaction against up to `negatives` items the user has
/// not interacted with in train or test. Ties count against the positive.
RankingResult rank_eval(const Recommender& rec, const Dataset& train, const Dataset& test,
                        const std::vector<std::size_t>& n_list = {5, 15},
                        std::size_t negatives = 99, std::uint64_t seed = 11, unsigned threads = 1);

/// Summarises precomputed ranks the same way rank_eval does.
RankingResult summarize_ranks(std::vector<RankRecord> records, const std::vector<std::size_t>& n_list,
                              std::size_t skipped = 0);

}  // namespace mmd
