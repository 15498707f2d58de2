// SPDX-License-Identifier: Apache-2.0
//
// Experiment drivers: method comparison, ablations, sweeps and the
// recommender enhancement study. Every table is written as CSV with the
// column order documented on its writer.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mmd/detect.hpp"
#include "mmd/eval.hpp"
#include "mmd/recommender.hpp"

namespace mmd {

struct MethodRow {
  std::string method;  // MMD, MUP-only, SOD, K-means++
  std::uint64_t seed = 0;
  Confusion conf;
  Rates rates;
  std::optional<double> precision;
  std::size_t flagged = 0;
};

struct ComparisonConfig {
  double sod_theta = 0.8;
};

/// MMD, MUP-only (U^cmu as the detection), SOD and k-means++ on one labeled
/// dataset. `mmd` is the already computed MMD report for these scores.
std::vector<MethodRow> compare_methods(const Dataset& data, const StageScores& scores,
                                       const DetectionReport& mmd, const PipelineConfig& config,
                                       const ComparisonConfig& cmp = {});

struct AblationRow {
  MetricForm form = MetricForm::Restricted;
  bool attention = true;
  std::uint64_t seed = 0;
  std::size_t parameters = 0;  // trainable entries of A
  Confusion conf;
  Rates rates;
  bool mup_only = false;
};

/// {E, D, F, R} x {attention on, off} on shared stage scores.
std::vector<AblationRow> ablation_suite(const Dataset& data, const StageScores& scores,
                                        const PipelineConfig& base);

struct SweepRow {
  std::string parameter;  // "alpha_g" or "theta_mu"
  double value = 0.0;
  std::uint64_t seed = 0;
  std::size_t candidates = 0;
  Confusion conf;
  Rates rates;
  bool mup_only = false;
};

std::vector<double> default_alpha_grid();  // 1.0, 1.5, ..., 4.5
std::vector<double> default_theta_grid();  // 0.1, 0.2, ..., 1.0

/// One row per grid value, other settings from `base`.
std::vector<SweepRow> sweep(const Dataset& data, const StageScores& scores,
                            const PipelineConfig& base, const std::string& parameter,
                            const std::vector<double>& values);

struct EnhancementConfig {
  std::vector<RecommenderKind> kinds{RecommenderKind::Ubcf, RecommenderKind::Ibcf,
                                     RecommenderKind::MfEals, RecommenderKind::MfBpr};
  std::vector<std::size_t> n_list{5, 15};
  std::size_t negatives = 99;
  SplitRatios ratios{};
  RecommenderConfig recommender{};
  unsigned threads = 1;
};

struct EnhancementRow {
  RecommenderKind kind = RecommenderKind::Ubcf;
  std::string arm;  // "detected" or "random"
  std::size_t n = 5;
  std::uint64_t seed = 0;
  std::size_t dropped = 0;
  double hr = 0.0;
  double ndcg = 0.0;
};

/// Arm "detected" drops `detected`; arm "random" drops as many uniformly drawn
/// users. Both arms then split 60/20/20 with the same seed, train on the train
/// part and rank the test part. Rows: kinds x n_list x 2 arms.
std::vector<EnhancementRow> enhancement_experiment(const Dataset& data,
                                                   const std::set<std::size_t>& detected,
                                                   const EnhancementConfig& config,
                                                   std::uint64_t seed);

/// method,seed,tp,fn,fp,tn,sen,spe,f,precision,flagged
void write_methods_csv(const std::vector<MethodRow>& rows, const std::filesystem::path& path);
/// form,attention,seed,parameters,tp,fn,fp,tn,sen,spe,f,mup_only
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);
/// parameter,value,seed,candidates,tp,fn,fp,tn,sen,spe,f,mup_only
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);
/// recommender,arm,n,seed,dropped,hr,ndcg
void write_enhancement_csv(const std::vector<EnhancementRow>& rows, const std::filesystem::path& path);

/// Shortest round-trip decimal text; "NA" for an undefined value.
std::string format_value(std::optional<double> v);

}  // namespace mmd
