// SPDX-License-Identifier: Apache-2.0
#include "mmd/metric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "mmd/error.hpp"

namespace mmd {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

ProfileVector profile_vector(const VectorXd& user_factor, const VectorXd& gaps, std::size_t p,
                             std::size_t k, std::size_t user) {
  if (static_cast<std::size_t>(user_factor.size()) != p || static_cast<std::size_t>(gaps.size()) != k)
    throw ShapeError("profile parts do not match (p, k)");
  ProfileVector out;
  out.user = user;
  out.z.resize(static_cast<Index>(p + k));
  out.z << user_factor, gaps;
  return out;
}

char form_tag(MetricForm form) noexcept { return static_cast<char>(form); }

MetricForm parse_form(const std::string& tag) {
  if (tag.size() == 1) {
    switch (std::toupper(static_cast<unsigned char>(tag[0]))) {
      case 'E': return MetricForm::Euclidean;
      case 'D': return MetricForm::Diagonal;
      case 'F': return MetricForm::Full;
      case 'R': return MetricForm::Restricted;
    }
  }
  throw ConfigError("metric form must be one of E, D, F, R (got '" + tag + "')");
}

std::size_t metric_parameter_count(MetricForm form, std::size_t p, std::size_t k) {
  switch (form) {
    case MetricForm::Euclidean: return 1;
    case MetricForm::Diagonal: return p + k;
    case MetricForm::Full: return (p + k) * (p + k);
    case MetricForm::Restricted: return p + k * k + 2 * p * k;
  }
  return 0;
}

MatrixXd MetricModel::trainable_mask() const {
  const Index d = static_cast<Index>(dim());
  const Index pp = static_cast<Index>(p);
  MatrixXd mask = MatrixXd::Zero(d, d);
  switch (form) {
    case MetricForm::Euclidean:
    case MetricForm::Diagonal:
      mask.diagonal().setOnes();
      break;
    case MetricForm::Full:
      mask.setOnes();
      break;
    case MetricForm::Restricted:
      mask.setOnes();
      mask.topLeftCorner(pp, pp).setZero();
      mask.topLeftCorner(pp, pp).diagonal().setOnes();
      break;
  }
  return mask;
}

std::size_t MetricModel::trainable_parameters() const {
  if (form == MetricForm::Euclidean) return 1;
  return static_cast<std::size_t>(trainable_mask().sum());
}

MetricModel init_metric(MetricForm form, std::size_t p, std::size_t k, std::uint64_t seed,
                        bool attention) {
  Rng rng(seed);
  MetricModel m;
  m.form = form;
  m.p = p;
  m.k = k;
  m.attention = attention;
  const Index d = static_cast<Index>(p + k);
  const Index pp = static_cast<Index>(p);
  const Index kk = static_cast<Index>(k);
  m.A = MatrixXd::Identity(d, d);
  if (form == MetricForm::Restricted) {
    for (Index c = 0; c < kk; ++c)
      for (Index r = 0; r < kk; ++r) m.A(pp + r, pp + c) = normal(rng);
  } else if (form == MetricForm::Full) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (Index c = 0; c < d; ++c)
      for (Index r = 0; r < d; ++r) m.A(r, c) = normal(rng) * scale;
  }
  m.W_t.resize(d, d);
  for (Index c = 0; c < d; ++c)
    for (Index r = 0; r < d; ++r) m.W_t(r, c) = uniform(rng, -0.01, 0.01);
  return m;
}

namespace {

VectorXd softmax(const VectorXd& f) {
  const double mx = f.maxCoeff();
  VectorXd e = (f.array() - mx).exp().matrix();
  return e / e.sum();
}

void check_square(const MatrixXd& m, Index d, const char* what) {
  if (m.rows() != d || m.cols() != d) throw ShapeError(std::string(what) + " must be (p+k) x (p+k)");
}

}  // namespace

VectorXd attention_vector(const VectorXd& z, const MatrixXd& A, const MatrixXd& W_t) {
  check_square(A, z.size(), "A");
  check_square(W_t, z.size(), "W_t");
  // f = z^T W_t A as a column vector: A^T (W_t^T z)
  return softmax(A.transpose() * (W_t.transpose() * z));
}

VectorXd attention_vector(const MetricModel& model, const VectorXd& z) {
  if (!model.attention) {
    if (static_cast<std::size_t>(z.size()) != model.dim()) throw ShapeError("profile size mismatch");
    return VectorXd::Constant(z.size(), 1.0 / static_cast<double>(z.size()));
  }
  return attention_vector(z, model.A, model.W_t);
}

VectorXd transform(const MetricModel& model, const VectorXd& z) {
  return attention_vector(model, z).cwiseProduct(z);
}

double transformed_distance(const VectorXd& x_j, const VectorXd& x_k, const MetricModel& model) {
  const VectorXd delta = x_j - x_k;
  const double q = model.c * model.c * delta.dot(model.A * delta);
  return std::sqrt(std::max(0.0, q));
}

double distance(const VectorXd& z_j, const VectorXd& z_k, const MetricModel& model) {
  if (z_j.size() != z_k.size()) throw ShapeError("profile size mismatch");
  return transformed_distance(transform(model, z_j), transform(model, z_k), model);
}

std::vector<Triplet> sample_triplets(const std::set<std::size_t>& candidates, std::size_t users,
                                     std::size_t per_anchor, Rng& rng) {
  if (candidates.size() < 2) throw SamplingError("need at least two candidates to form triplets");
  std::vector<std::size_t> cand(candidates.begin(), candidates.end());
  std::vector<std::size_t> rest;
  for (std::size_t u = 0; u < users; ++u)
    if (!candidates.count(u)) rest.push_back(u);
  if (rest.empty()) throw SamplingError("need at least one non-candidate user");

  std::vector<Triplet> out;
  out.reserve(cand.size() * per_anchor);
  for (std::size_t a = 0; a < cand.size(); ++a) {
    for (std::size_t r = 0; r < per_anchor; ++r) {
      // positive: uniform over the other candidates
      std::size_t pi = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(cand.size()) - 2));
      if (pi >= a) ++pi;
      const std::size_t ni = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(rest.size()) - 1));
      out.push_back({cand[a], cand[pi], rest[ni]});
    }
  }
  return out;
}

std::vector<Triplet> sample_triplets(const std::set<std::size_t>& candidates, std::size_t users,
                                     std::size_t per_anchor, std::uint64_t seed) {
  Rng rng(seed);
  return sample_triplets(candidates, users, per_anchor, rng);
}

double mlc_loss(std::span<const Triplet> triplets, const ProfileTable& profiles,
                const MetricModel& model) {
  const double lam = model.lambda;
  double total = 0.0;
  for (const Triplet& t : triplets) {
    const VectorXd xa = transform(model, profiles[t.anchor]);
    const double d_pos = transformed_distance(xa, transform(model, profiles[t.positive]), model);
    const double d_neg = transformed_distance(xa, transform(model, profiles[t.negative]), model);
    total += std::max(0.0, lam * d_pos - (1.0 - lam) * d_neg + model.c);
  }
  return total;
}

namespace {

struct Side {
  VectorXd z, t, x;
};

Side side(const MetricModel& m, const VectorXd& z) {
  Side s;
  s.z = z;
  s.t = attention_vector(m, z);
  s.x = s.t.cwiseProduct(z);
  return s;
}

// Back-propagates d(weight * dist)/dx_side into A and W_t through the attention
// softmax of that side.
void attention_backward(const MetricModel& m, const Side& s, const VectorXd& d_x,
                        MetricGradient& g) {
  if (!m.attention) return;
  const VectorXd d_t = d_x.cwiseProduct(s.z);
  const VectorXd d_f = s.t.cwiseProduct((d_t.array() - s.t.dot(d_t)).matrix());
  // f = A^T W_t^T z  =>  dW_t = z (A d_f)^T,  dA = (W_t^T z) d_f^T
  g.W_t.noalias() += s.z * (m.A * d_f).transpose();
  g.A.noalias() += (m.W_t.transpose() * s.z) * d_f.transpose();
}

// Adds weight * d dist(a, b) / d theta.
void distance_grad(const MetricModel& m, const Side& a, const Side& b, double weight,
                   MetricGradient& g) {
  const VectorXd delta = a.x - b.x;
  const double c2 = m.c * m.c;
  const double q = c2 * delta.dot(m.A * delta);
  if (q <= 1e-24) return;
  const double d = std::sqrt(q);
  const double scale = weight * c2 / (2.0 * d);
  g.A.noalias() += scale * delta * delta.transpose();
  const VectorXd d_delta = scale * (m.A + m.A.transpose()) * delta;
  attention_backward(m, a, d_delta, g);
  attention_backward(m, b, -d_delta, g);
}

}  // namespace

double triplet_loss_and_grad(const Triplet& t, const ProfileTable& profiles, const MetricModel& m,
                             MetricGradient& grad) {
  const Side a = side(m, profiles[t.anchor]);
  const Side pos = side(m, profiles[t.positive]);
  const Side neg = side(m, profiles[t.negative]);
  const double d_pos = transformed_distance(a.x, pos.x, m);
  const double d_neg = transformed_distance(a.x, neg.x, m);
  const double h = m.lambda * d_pos - (1.0 - m.lambda) * d_neg + m.c;
  if (h <= 0.0) return 0.0;
  distance_grad(m, a, pos, m.lambda, grad);
  distance_grad(m, a, neg, -(1.0 - m.lambda), grad);
  return h;
}

MatrixXd psd_project(const MatrixXd& A) {
  if (A.rows() != A.cols()) throw ShapeError("psd_project needs a square matrix");
  if (!A.allFinite()) throw NumericError("metric matrix has non-finite entries");
  const MatrixXd sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("eigen-decomposition failed");
  constexpr double kFloor = 1e-6;
  VectorXd ev = es.eigenvalues();
  if (ev.size() == 0 || ev.minCoeff() >= kFloor) return sym;
  ev = ev.cwiseMax(kFloor);
  const MatrixXd& V = es.eigenvectors();
  MatrixXd out = V * ev.asDiagonal() * V.transpose();
  return 0.5 * (out + out.transpose());
}

void project_model(MetricModel& model) {
  constexpr double kFloor = 1e-6;
  switch (model.form) {
    case MetricForm::Euclidean: {
      const double a = std::max(model.A(0, 0), kFloor);
      model.A = MatrixXd::Identity(model.A.rows(), model.A.cols()) * a;
      break;
    }
    case MetricForm::Diagonal: {
      const VectorXd diag = model.A.diagonal().cwiseMax(kFloor);
      model.A = diag.asDiagonal();
      break;
    }
    default:
      model.A = psd_project(model.A);
  }
}

MlcTrainResult train_mlc(const ProfileTable& profiles, const std::set<std::size_t>& candidates,
                         MetricModel model, const MlcConfig& cfg) {
  const Index d = static_cast<Index>(model.dim());
  for (const auto& z : profiles)
    if (z.size() != d) throw ShapeError("profile size does not match the metric");
  Rng rng(cfg.seed);
  // held-out triplets come from an independent stream so they never shift the
  // training sample
  const auto holdout = sample_triplets(candidates, profiles.size(), cfg.per_anchor,
                                       derive_seed(cfg.seed, "holdout"));

  const MatrixXd mask = model.trainable_mask();
  MatrixXd acc_A = MatrixXd::Constant(d, d, cfg.adagrad_init);
  MatrixXd acc_W = MatrixXd::Constant(d, d, cfg.adagrad_init);
  double acc_scalar = cfg.adagrad_init;

  MlcTrainResult result;
  std::size_t updates = 0;
  project_model(model);
  MetricGradient grad{MatrixXd::Zero(d, d), MatrixXd::Zero(d, d)};

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto triplets = sample_triplets(candidates, profiles.size(), cfg.per_anchor, rng);
    std::shuffle(triplets.begin(), triplets.end(), rng);
    double epoch_loss = 0.0;
    for (const Triplet& t : triplets) {
      grad.A.setZero();
      grad.W_t.setZero();
      const double h = triplet_loss_and_grad(t, profiles, model, grad);
      if (!std::isfinite(h))
        throw TrainingError("metric loss became non-finite at epoch " + std::to_string(epoch));
      epoch_loss += h;

      if (model.form == MetricForm::Euclidean) {
        const double a = model.A(0, 0);
        const double g = grad.A.trace() + 2.0 * cfg.l2 * a;
        acc_scalar += g * g;
        const double next = a - cfg.lr * g / std::sqrt(acc_scalar);
        model.A.diagonal().setConstant(next);
      } else {
        const MatrixXd gA = (grad.A + 2.0 * cfg.l2 * model.A).cwiseProduct(mask);
        acc_A += gA.cwiseProduct(gA);
        model.A -= cfg.lr * gA.cwiseQuotient(acc_A.cwiseSqrt());
      }
      if (model.attention) {
        const MatrixXd gW = grad.W_t + 2.0 * cfg.l2 * model.W_t;
        acc_W += gW.cwiseProduct(gW);
        model.W_t -= cfg.lr * gW.cwiseQuotient(acc_W.cwiseSqrt());
      }
      ++updates;
      if (cfg.project_every && updates % cfg.project_every == 0) project_model(model);
    }
    result.train_loss.push_back(triplets.empty() ? 0.0 : epoch_loss / static_cast<double>(triplets.size()));
    result.holdout_loss.push_back(mlc_loss(holdout, profiles, model) / static_cast<double>(holdout.size()));
  }
  project_model(model);
  result.model = std::move(model);
  result.updates = updates;
  return result;
}

namespace {

nlohmann::json matrix_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const nlohmann::json& v, Index d) {
  MatrixXd m(d, d);
  if (!v.is_array() || static_cast<Index>(v.size()) != d) throw Error("metric checkpoint matrix shape mismatch");
  for (Index r = 0; r < d; ++r) {
    const auto& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != d) throw Error("metric checkpoint matrix shape mismatch");
    for (Index c = 0; c < d; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

void save_metric_model(const MetricModel& model, const std::filesystem::path& path) {
  nlohmann::json v;
  v["form"] = std::string(1, form_tag(model.form));
  v["p"] = model.p;
  v["k"] = model.k;
  v["c"] = model.c;
  v["lambda"] = model.lambda;
  v["attention"] = model.attention;
  v["A"] = matrix_json(model.A);
  v["W_t"] = matrix_json(model.W_t);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << v.dump() << '\n';
}

MetricModel load_metric_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json v;
  try {
    in >> v;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid metric checkpoint: ") + e.what());
  }
  MetricModel m;
  m.form = parse_form(v.at("form").get<std::string>());
  m.p = v.at("p").get<std::size_t>();
  m.k = v.at("k").get<std::size_t>();
  m.c = v.at("c").get<double>();
  m.lambda = v.at("lambda").get<double>();
  m.attention = v.value("attention", true);
  const Index d = static_cast<Index>(m.p + m.k);
  m.A = matrix_from_json(v.at("A"), d);
  m.W_t = matrix_from_json(v.at("W_t"), d);
  return m;
}

void save_eigenvalues_csv(const MetricModel& model, const std::filesystem::path& path) {
  const MatrixXd sym = 0.5 * (model.A + model.A.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("eigen-decomposition failed");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "index,eigenvalue\n";
  for (Index i = 0; i < es.eigenvalues().size(); ++i) out << i << ',' << es.eigenvalues()(i) << '\n';
}

}  // namespace mmd
