// SPDX-License-Identifier: Apache-2.0
//
// Metric-seeded 2-means clustering and the end-to-end detection pipeline.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmd/dataset.hpp"
#include "mmd/lfm.hpp"
#include "mmd/metric.hpp"
#include "mmd/profile.hpp"
#include "mmd/sentiment.hpp"

namespace mmd {

struct KmeansResult {
  /// 0 = cluster seeded from the candidate mean, 1 = the other cluster.
  std::vector<int> assignment;
  Eigen::VectorXd centroids[2];
  /// Sum of metric distances to the assigned centroid, one entry per
  /// assignment pass (index 0 = assignment against the initial centroids).
  std::vector<double> objective;
  std::size_t iterations = 0;
  std::size_t reseeds = 0;
  bool converged = false;
};

/// Lloyd iterations with distance() for assignment and raw-z means for
/// centroids. A centroid update is kept only if it does not raise that
/// cluster's summed distance. An empty cluster is re-seeded at the point
/// farthest from the other centroid (lowest index on ties). Assignment ties go
/// to cluster 0. Throws ConfigError for identical or mis-sized centroids.
KmeansResult kmeans_metric(const ProfileTable& profiles, const MetricModel& model,
                           const Eigen::VectorXd& centroid_pmu,
                           const Eigen::VectorXd& centroid_normal, std::size_t max_iter = 100,
                           double tol = 1e-12, unsigned threads = 1);

/// Mean z over the candidates and mean z over everyone else. Throws
/// ConfigError if either group is empty.
std::pair<Eigen::VectorXd, Eigen::VectorXd> heuristic_centroids(const ProfileTable& profiles,
                                                                const std::set<std::size_t>& candidates);

/// Members of the cluster holding strictly more candidates. On a tie, the
/// smaller cluster (cluster 0 if equal sizes). Empty candidates -> empty set.
std::set<std::size_t> label_pmu(const std::vector<int>& assignment,
                                const std::set<std::size_t>& candidates);

struct PipelineConfig {
  LfmConfig lfm;
  SentimentDims sentiment_dims;
  SentimentTrainConfig sentiment;
  std::size_t vocab_min_count = 1;
  std::size_t k = 16;
  double alpha_g = 3.5;
  double theta_mu = 0.7;
  MetricForm form = MetricForm::Restricted;
  bool attention = true;
  double c = 1.0;
  double lambda = 0.6;
  MlcConfig mlc;
  std::size_t kmeans_max_iter = 100;
  /// Master seed; stage seeds are derive_seed(seed, "<stage>") and override
  /// the seed fields of the nested configs.
  std::uint64_t seed = 42;
  unsigned threads = 1;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Snapshot of every field as compact JSON text with fixed key order.
std::string to_json_text(const PipelineConfig& config);

/// Output of the LFM and sentiment stages, reusable across detector runs that
/// differ only in downstream settings.
struct StageScores {
  FactorModel factors;
  std::vector<double> rating_scores;  // s^r per interaction
  std::vector<double> review_scores;  // s^v per interaction
  std::vector<double> lfm_loss;
  std::vector<double> sentiment_loss;
};

/// Trains LFM and the sentiment model on all of `data` and scores every
/// interaction. With a run directory, each stage is written there and an
/// existing checkpoint for the same data and stage config is loaded instead
/// of retrained.
StageScores compute_scores(const Dataset& data, const PipelineConfig& config,
                           const std::optional<std::filesystem::path>& run_dir = std::nullopt);

struct DetectionReport {
  std::size_t users = 0;
  std::set<std::size_t> candidates;  // U^cmu
  std::set<std::size_t> detected;    // U^mu
  std::vector<UserLabel> labels;     // one per user
  /// Metric learning skipped because |U^cmu| < 2.
  bool mup_only = false;
  std::vector<double> mlc_train_loss;
  std::vector<double> mlc_holdout_loss;
  std::size_t mlc_updates = 0;
  std::vector<double> kmeans_objective;
  std::size_t kmeans_iterations = 0;
  std::size_t kmeans_reseeds = 0;
  std::string config_json;
};

/// Profile vectors z_u = p_u (+) g_u for all users.
ProfileTable build_profiles(const Dataset& data, const StageScores& scores, std::size_t k);

/// Candidate filtering, metric learning, clustering and labeling on top of
/// precomputed stage scores. With a run directory the metric checkpoint,
/// eigenvalues and gap vectors are written there.
DetectionReport detect_from_scores(const Dataset& data, const StageScores& scores,
                                   const PipelineConfig& config,
                                   const std::optional<std::filesystem::path>& run_dir = std::nullopt);

/// Whole pipeline. Throws Error for an empty dataset.
DetectionReport run_mmd(const Dataset& data, const PipelineConfig& config,
                        const std::optional<std::filesystem::path>& run_dir = std::nullopt);

/// JSON report with the config snapshot embedded verbatim.
void save_report_json(const DetectionReport& report, const Dataset& data,
                      const std::filesystem::path& path);
/// `user,name,candidate,label` rows.
void save_report_labels_csv(const DetectionReport& report, const Dataset& data,
                            const std::filesystem::path& path);

}  // namespace mmd
