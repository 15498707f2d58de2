// SPDX-License-Identifier: Apache-2.0
//
// Hierarchical dual-attention recurrent sentiment scorer.
//
// A review is a list of sentences of word ids. Each sentence runs through a
// word-level gated recurrence whose input at step t is the window
// (y_{t-1}, y_t, y_{t+1}) of word embeddings (zero-padded at the borders),
// followed by additive attention pooling into a sentence vector. Sentence
// vectors go through a second recurrence of the same windowed form and a
// second attention pool, giving the review vector d. The score is
// s = 1 + 4 * sigmoid(w_o . d + b_o), which lies strictly inside (1, 5).
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mmd/dataset.hpp"

namespace mmd {

struct Vocab {
  static constexpr std::size_t kUnknown = 0;

  /// tokens[0] is the unknown token; real tokens occupy 1..size().
  std::vector<std::string> tokens{"<unk>"};
  std::unordered_map<std::string, std::size_t> index;

  std::size_t size() const { return tokens.size() - 1; }
  std::size_t lookup(const std::string& token) const;
  void add(const std::string& token);
};

/// Tokens seen at least `min_count` times, indexed in lexicographic order.
Vocab build_vocab(const Dataset& train, std::size_t min_count);

/// Gated recurrence over windowed inputs. W_* are hidden x (3 * input),
/// U_* are hidden x hidden.
struct GruParams {
  Eigen::MatrixXd W_update, U_update;
  Eigen::VectorXd b_update;
  Eigen::MatrixXd W_reset, U_reset;
  Eigen::VectorXd b_reset;
  Eigen::MatrixXd W_cand, U_cand;
  Eigen::VectorXd b_cand;

  static GruParams zeros(Eigen::Index input, Eigen::Index hidden);
  Eigen::Index input_dim() const { return W_update.cols() / 3; }
  Eigen::Index hidden_dim() const { return U_update.rows(); }
};

/// Additive attention: u_t = tanh(W v_t + b), alpha = softmax_t(u_t . context).
struct AttentionParams {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
  Eigen::VectorXd context;

  static AttentionParams zeros(Eigen::Index dim);
};

/// All trainable tensors. Gradients and optimizer state share this layout.
struct HdanParams {
  Eigen::MatrixXd embedding;  // (|V| + 1) x d_w, row 0 = unknown token
  GruParams word_gru;
  AttentionParams word_attention;
  GruParams sentence_gru;
  AttentionParams sentence_attention;
  Eigen::VectorXd head_w;
  Eigen::VectorXd head_b;  // size 1

  static HdanParams zeros(std::size_t vocab_rows, Eigen::Index word_dim, Eigen::Index hidden_dim);
  static HdanParams zeros_like(const HdanParams& other);

  /// Views over every tensor, in checkpoint order; block 0 is the embedding.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
  std::vector<std::string> block_names() const;
};

struct SentimentDims {
  Eigen::Index word_dim = 32;
  Eigen::Index hidden_dim = 32;
  std::size_t max_sentences = 16;
  std::size_t max_words = 32;
};

struct SentimentModel {
  Vocab vocab;
  SentimentDims dims;
  HdanParams params;
};

/// Random initialization: embeddings U(-0.1, 0.1), matrices Glorot-uniform,
/// context vectors U(-0.1, 0.1), biases zero.
SentimentModel init_sentiment_model(Vocab vocab, SentimentDims dims, std::uint64_t seed);

/// One recurrence step. Missing neighbours at sequence borders must be passed
/// as zero vectors. Throws ShapeError on inconsistent sizes.
Eigen::VectorXd gru_step(const GruParams& params, const Eigen::VectorXd& prev,
                         const Eigen::VectorXd& current, const Eigen::VectorXd& next,
                         const Eigen::VectorXd& h_prev);

struct Pooled {
  Eigen::VectorXd vector;
  Eigen::VectorXd weights;
};

/// Attention pooling over the rows of `sequence` (T x d). Throws Error when T = 0.
Pooled attention_pool(const Eigen::MatrixXd& sequence, const AttentionParams& params);

/// Word ids per sentence, truncated to the model caps.
using EncodedReview = std::vector<std::vector<std::size_t>>;
EncodedReview encode_review(const SentimentModel& model, const TokenizedReview& review);

/// Sentiment score in (1, 5). Throws Error for a review without tokens.
double score_review(const SentimentModel& model, const TokenizedReview& review);
double score_review(const SentimentModel& model, const std::string& review);
double score_encoded(const SentimentModel& model, const EncodedReview& review);

/// Scores every interaction of `data` (thread-count knob for read-only work).
std::vector<double> score_all(const SentimentModel& model, const Dataset& data,
                              unsigned threads = 1);

/// Per-review loss 0.5 * (rating - s)^2 and its full gradient.
struct ReviewLoss {
  double loss = 0.0;
  double score = 0.0;
};
ReviewLoss review_loss(const SentimentModel& model, const EncodedReview& review, double rating);
ReviewLoss review_loss_and_grad(const SentimentModel& model, const EncodedReview& review,
                                double rating, HdanParams& grad);

struct SentimentTrainConfig {
  double lr = 0.05;
  std::size_t epochs = 50;
  double adagrad_init = 1e-8;
  std::uint64_t seed = 2;
};

struct SentimentTrainResult {
  SentimentModel model;
  /// Total loss 0.5 * sum (r - s)^2 over the training set, index 0 before
  /// training and index e after epoch e.
  std::vector<double> loss;
};

/// Per-review Adagrad on the squared loss against ratings. Throws
/// TrainingError on a non-finite loss.
SentimentTrainResult train_sentiment(SentimentModel model, const Dataset& train,
                                     const SentimentTrainConfig& config);

/// Total 0.5 * sum (r - s)^2 over `data`.
double sentiment_loss(const SentimentModel& model, const Dataset& data);

/// Binary checkpoint, little-endian:
///   8 bytes magic "MMDHDAN1", u64 word_dim, u64 hidden_dim, u64 max_sentences,
///   u64 max_words, u64 V, then V tokens as (u64 length, bytes) for ids 1..V,
///   then each tensor of HdanParams::blocks() as (u64 count, count doubles)
///   in column-major element order.
void save_sentiment_model(const SentimentModel& model, const std::filesystem::path& path);
SentimentModel load_sentiment_model(const std::filesystem::path& path);

}  // namespace mmd
