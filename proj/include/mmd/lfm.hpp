// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mmd/dataset.hpp"

namespace mmd {

/// Basic latent factor model: user matrix P (m x p) and item matrix Q (n x p).
struct FactorModel {
  Eigen::MatrixXd P;
  Eigen::MatrixXd Q;

  std::size_t users() const { return static_cast<std::size_t>(P.rows()); }
  std::size_t items() const { return static_cast<std::size_t>(Q.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(P.cols()); }

  /// Unclamped inner product p_u . q_i.
  double dot(std::size_t u, std::size_t i) const;
};

struct LfmConfig {
  std::size_t dim = 32;
  double lr = 0.01;
  std::size_t epochs = 200;
  double l2 = 1e-4;
  std::uint64_t seed = 1;
};

struct LfmTrainResult {
  FactorModel model;
  /// Mean squared error over the training set after each epoch.
  std::vector<double> train_loss;
  /// Epoch (1-based) whose model was kept; 0 means the initialization.
  std::size_t best_epoch = 0;
};

/// SGD on sum (p_u . q_i - r_ui)^2 plus l2 * (|p_u|^2 + |q_i|^2) per
/// interaction. Keeps the epoch with the lowest loss on `holdout`, or on the
/// training set when no holdout is given. Throws TrainingError on divergence.
LfmTrainResult train_lfm(const Dataset& train, const LfmConfig& config,
                         const Dataset* holdout = nullptr);

/// Rating score clamp(p_u . q_i, 1, 5). Throws std::out_of_range on bad ids.
double rating_score(const FactorModel& model, std::size_t u, std::size_t i);

/// Exact sum over `data` of (p_u . q_i - r_ui)^2, unclamped and unregularized.
double lfm_loss(const FactorModel& model, const Dataset& data);

/// Gradient of (p_u . q_i - r)^2 + l2 (|p_u|^2 + |q_i|^2) w.r.t. p_u and q_i.
struct FactorGradient {
  Eigen::VectorXd user;
  Eigen::VectorXd item;
};
FactorGradient interaction_gradient(const FactorModel& model, std::size_t u, std::size_t i,
                                    double rating, double l2);

/// Binary checkpoint, little-endian:
///   8 bytes magic "MMDLFM01", u64 m, u64 n, u64 p,
///   m*p doubles of P (row-major), n*p doubles of Q (row-major).
void save_factor_model(const FactorModel& model, const std::filesystem::path& path);
FactorModel load_factor_model(const std::filesystem::path& path);

}  // namespace mmd
