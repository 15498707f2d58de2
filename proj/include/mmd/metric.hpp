// SPDX-License-Identifier: Apache-2.0
//
// Attention metric learning over user profile vectors z = p_u (+) g_u.
//
// Distance between two profiles:
//   t(z)  = softmax over components of z^T W_t A
//   x     = t(z) .* z
//   d     = sqrt(max(0, c^2 (x_j - x_k)^T A (x_j - x_k)))
// The metric matrix A comes in four structural forms (see MetricForm).
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmd/profile.hpp"
#include "mmd/rng.hpp"

namespace mmd {

struct ProfileVector {
  std::size_t user = 0;
  Eigen::VectorXd z;
};

/// Concatenation p_u (+) g_u. Throws ShapeError when sizes differ from (p, k).
ProfileVector profile_vector(const Eigen::VectorXd& user_factor, const Eigen::VectorXd& gaps,
                             std::size_t p, std::size_t k, std::size_t user = 0);

enum class MetricForm : char {
  Euclidean = 'E',   // A = a I, one scalar
  Diagonal = 'D',    // diagonal A
  Full = 'F',        // dense A
  Restricted = 'R',  // diagonal p-block, dense k-block, dense p x k cross blocks
};

char form_tag(MetricForm form) noexcept;
MetricForm parse_form(const std::string& tag);

struct MetricModel {
  MetricForm form = MetricForm::Restricted;
  std::size_t p = 32;
  std::size_t k = 16;
  Eigen::MatrixXd A;
  Eigen::MatrixXd W_t;
  double c = 1.0;
  double lambda = 0.6;
  /// When false the attention vector is uniform and W_t is never trained.
  bool attention = true;

  std::size_t dim() const { return p + k; }

  /// 1 where an entry of A is an independent trainable parameter. The
  /// Euclidean form ties the diagonal to one scalar, reported by
  /// trainable_parameters() as 1.
  Eigen::MatrixXd trainable_mask() const;
  std::size_t trainable_parameters() const;
};

/// Closed-form trainable-parameter count of A per form.
std::size_t metric_parameter_count(MetricForm form, std::size_t p, std::size_t k);

/// Initial metric. Restricted: identity p-block, N(0,1) k-block, zero cross
/// blocks. Euclidean / Diagonal: identity. Full: N(0,1)/sqrt(p+k) entries.
/// W_t ~ U(-0.01, 0.01) in every form.
MetricModel init_metric(MetricForm form, std::size_t p, std::size_t k, std::uint64_t seed,
                        bool attention = true);

/// softmax(z^T W_t A). Throws ShapeError on mismatched sizes.
Eigen::VectorXd attention_vector(const Eigen::VectorXd& z, const Eigen::MatrixXd& A,
                                 const Eigen::MatrixXd& W_t);
/// Model-aware variant: uniform weights when attention is disabled.
Eigen::VectorXd attention_vector(const MetricModel& model, const Eigen::VectorXd& z);

/// Attention-weighted profile t(z) .* z.
Eigen::VectorXd transform(const MetricModel& model, const Eigen::VectorXd& z);

double distance(const Eigen::VectorXd& z_j, const Eigen::VectorXd& z_k, const MetricModel& model);

/// Seminorm distance between already-transformed points.
double transformed_distance(const Eigen::VectorXd& x_j, const Eigen::VectorXd& x_k,
                            const MetricModel& model);

struct Triplet {
  std::size_t anchor;    // candidate
  std::size_t positive;  // another candidate
  std::size_t negative;  // non-candidate
};

/// Every candidate anchors `per_anchor` triplets; positives are drawn from the
/// other candidates and negatives from users outside the candidate set.
/// Throws SamplingError when |candidates| < 2 or no non-candidate exists.
std::vector<Triplet> sample_triplets(const std::set<std::size_t>& candidates, std::size_t users,
                                     std::size_t per_anchor, Rng& rng);
std::vector<Triplet> sample_triplets(const std::set<std::size_t>& candidates, std::size_t users,
                                     std::size_t per_anchor, std::uint64_t seed);

/// Profile vectors indexed by user id.
using ProfileTable = std::vector<Eigen::VectorXd>;

/// sum over triplets of max(0, lambda d(j,k) - (1 - lambda) d(j,k') + c).
double mlc_loss(std::span<const Triplet> triplets, const ProfileTable& profiles,
                const MetricModel& model);

struct MetricGradient {
  Eigen::MatrixXd A;    // full dL/dA before masking
  Eigen::MatrixXd W_t;  // zero when attention is disabled
};

/// Hinge loss of one triplet and its gradient (no regularizer). Terms at a
/// hinge kink or at d = 0 contribute zero gradient.
double triplet_loss_and_grad(const Triplet& t, const ProfileTable& profiles,
                             const MetricModel& model, MetricGradient& grad);

/// Symmetrize, then clamp eigenvalues below 1e-6 to 1e-6. Returns the
/// symmetrized input unchanged when it is already positive definite at that
/// floor. Throws NumericError on non-finite input or eigensolver failure.
Eigen::MatrixXd psd_project(const Eigen::MatrixXd& A);

/// Applies psd_project in a way that respects the form (scalar / diagonal
/// clamps for E and D).
void project_model(MetricModel& model);

struct MlcConfig {
  double lr = 0.05;
  std::size_t epochs = 100;
  double l2 = 1e-2;
  std::size_t per_anchor = 5;
  std::size_t project_every = 50;
  double adagrad_init = 1e-8;
  std::uint64_t seed = 3;
};

struct MlcTrainResult {
  MetricModel model;
  /// Mean hinge loss over each epoch's triplets, measured before the updates.
  std::vector<double> train_loss;
  /// Mean hinge loss on a fixed held-out triplet sample after each epoch.
  std::vector<double> holdout_loss;
  std::size_t updates = 0;
};

/// Adagrad on the triplet hinge loss plus l2 * |Theta|^2 over the trainable
/// entries of A and W_t. Projects A every `project_every` updates (starting
/// with update 0) and once at the end.
MlcTrainResult train_mlc(const ProfileTable& profiles, const std::set<std::size_t>& candidates,
                         MetricModel model, const MlcConfig& config);

/// JSON checkpoint: {"form","p","k","c","lambda","attention","A","W_t"} with
/// matrices as arrays of rows.
void save_metric_model(const MetricModel& model, const std::filesystem::path& path);
MetricModel load_metric_model(const std::filesystem::path& path);

/// Eigenvalues of the symmetrized A, ascending, as `index,eigenvalue` rows.
void save_eigenvalues_csv(const MetricModel& model, const std::filesystem::path& path);

}  // namespace mmd
