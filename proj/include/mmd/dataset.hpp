// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mmd/tokenize.hpp"

namespace mmd {

enum class UserLabel : std::uint8_t { Normal = 0, Pmu = 1 };

const char* to_string(UserLabel label) noexcept;
UserLabel parse_label(const std::string& text);

struct Interaction {
  std::size_t user = 0;
  std::size_t item = 0;
  int rating = 0;  // 1..5
  std::string review;
  TokenizedReview tokens;
  // Ground truth, only meaningful for synthetic data.
  bool fake_rating = false;
  bool negative_review = false;

  bool operator==(const Interaction&) const = default;
};

/// Interaction set over contiguous user ids [0,m) and item ids [0,n).
/// `user_names` / `item_names` map the dense ids back to the ids found on disk.
struct Dataset {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<Interaction> interactions;
  std::optional<std::vector<UserLabel>> labels;
  std::vector<std::string> user_names;
  std::vector<std::string> item_names;

  bool operator==(const Dataset&) const = default;

  /// Interaction indices grouped per user, in storage order.
  std::vector<std::vector<std::size_t>> by_user() const;

  /// Throws mmd::Error when an invariant is broken (duplicate pair, ids out of
  /// range, rating outside 1..5, empty review, label count mismatch).
  void validate() const;
};

enum class FileFormat { Jsonl, Csv };

FileFormat format_from_path(const std::filesystem::path& path);

/// JSONL: {"user","item","rating","review"[,"label","fake_rating","negative_review"]}.
/// CSV: header `user,item,rating,review[,label]`, review double-quoted.
/// Users and items are re-indexed in order of first appearance.
Dataset load_dataset(const std::filesystem::path& path, FileFormat format);
Dataset load_dataset(const std::filesystem::path& path);

void save_dataset(const Dataset& data, const std::filesystem::path& path, FileFormat format);

/// Writes `user,label` rows (labels must be present).
void save_labels_csv(const Dataset& data, const std::filesystem::path& path);

/// Builds a dataset from in-memory records, tokenizing reviews. Same checks as
/// the loaders; `line` in errors is the 1-based record index.
struct RawRecord {
  std::string user;
  std::string item;
  int rating = 0;
  std::string review;
  std::optional<UserLabel> label;
  bool fake_rating = false;
  bool negative_review = false;
};
Dataset build_dataset(const std::vector<RawRecord>& records);

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct Lexicon {
  /// Words per sentiment level 1 (strongly negative) .. 5 (strongly positive).
  /// Level 3 reviews mix level-2 and level-4 words.
  std::vector<std::string> level[5];
  /// Optional intensifiers inserted before the sentiment words (none by default).
  std::vector<std::string> fillers;

  static Lexicon defaults();
};

struct SynthConfig {
  std::size_t n_normal = 450;
  std::size_t n_pmu = 50;
  std::size_t n_items = 300;
  std::size_t n_genres = 6;
  IntRange interactions_per_user{8, 40};
  IntRange pmu_interactions_per_user{8, 16};
  double theta_fa = 0.5;
  double theta_ne = 0.5;
  /// Lower bound on a PMU's masking-pair fraction. The masked count is drawn
  /// uniformly between this bound and the most the caps allow.
  double theta_mu_target = 0.7;
  /// PMUs keep the share of interactions with a low rating or a negative
  /// review strictly below this.
  double pmu_negative_cap = 0.8;
  /// Upper bound (exclusive) on a normal user's masking-pair fraction.
  double normal_mask_cap = 0.2;
  /// Probability that a mid rating (2..4) comes with a review one level off.
  double review_jitter = 0.15;
  /// Share of normal users writing neutral reviews regardless of rating.
  double lukewarm_share = 0.1;
  /// Probability that a normal user has one careless (flipped) rating.
  double careless_prob = 0.2;
  /// Probability that a PMU masking rating is the extreme value (5 or 1).
  double pmu_extreme_prob = 0.9;
  /// Sentences per review. Every sentence is "the item is <w1> and <w2>."
  std::size_t sentences_per_review = 1;
  Lexicon lexicon = Lexicon::defaults();
  std::uint64_t seed = 7;

  /// Throws ConfigError when a bound is out of range or the masking
  /// constraints cannot be met for some interaction count in the PMU range.
  void validate() const;
};

/// Planted-quality synthetic data with injected PMUs. Pure function of config.
Dataset generate_synthetic(const SynthConfig& config);

/// Masking-pair fraction of one user: |{fake XOR negative}| / |interactions|.
double masking_fraction(const Dataset& data, std::size_t user);

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  double sparsity = 0.0;
  double avg_words_per_sentence = 0.0;
  double avg_sentences_per_review = 0.0;
  double avg_reviews_per_user = 0.0;
  std::optional<double> pmu_ratio;
};

DatasetStats dataset_stats(const Dataset& data);

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Per-user stratified interaction split. Every part keeps the full user/item
/// universe (same m, n, names, labels) so ids stay comparable across parts.
DatasetSplit split(const Dataset& data, SplitRatios ratios, std::uint64_t seed);

/// Removes the given users and re-indexes the remaining ones (items keep ids).
Dataset drop_users(const Dataset& data, const std::vector<std::size_t>& users);

}  // namespace mmd
