// SPDX-License-Identifier: Apache-2.0
#include "mmd/lfm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mmd/error.hpp"
#include "mmd/rng.hpp"

namespace mmd {

double FactorModel::dot(std::size_t u, std::size_t i) const {
  return P.row(static_cast<Eigen::Index>(u)).dot(Q.row(static_cast<Eigen::Index>(i)));
}

namespace {

double mean_loss(const FactorModel& model, const Dataset& data) {
  if (data.interactions.empty()) return 0.0;
  return lfm_loss(model, data) / static_cast<double>(data.interactions.size());
}

}  // namespace

LfmTrainResult train_lfm(const Dataset& train, const LfmConfig& cfg, const Dataset* holdout) {
  if (train.interactions.empty()) throw TrainingError("LFM training set is empty");
  if (cfg.dim == 0) throw ConfigError("LFM dimension must be positive");

  Rng rng(cfg.seed);
  const auto p = static_cast<Eigen::Index>(cfg.dim);
  FactorModel model;
  model.P.resize(static_cast<Eigen::Index>(train.m), p);
  model.Q.resize(static_cast<Eigen::Index>(train.n), p);
  for (Eigen::Index r = 0; r < model.P.rows(); ++r)
    for (Eigen::Index c = 0; c < p; ++c) model.P(r, c) = uniform(rng, -0.01, 0.01);
  for (Eigen::Index r = 0; r < model.Q.rows(); ++r)
    for (Eigen::Index c = 0; c < p; ++c) model.Q(r, c) = uniform(rng, -0.01, 0.01);

  const bool use_holdout = holdout && !holdout->interactions.empty();
  const Dataset& monitor = use_holdout ? *holdout : train;

  LfmTrainResult result;
  result.model = model;
  double best = mean_loss(model, monitor);

  std::vector<std::size_t> order(train.interactions.size());
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd pu(p);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k : order) {
      const Interaction& x = train.interactions[k];
      auto prow = model.P.row(static_cast<Eigen::Index>(x.user));
      auto qrow = model.Q.row(static_cast<Eigen::Index>(x.item));
      const double err = prow.dot(qrow) - x.rating;
      pu = prow.transpose();
      prow -= cfg.lr * (2.0 * err * qrow + 2.0 * cfg.l2 * prow);
      qrow -= cfg.lr * (2.0 * err * pu.transpose() + 2.0 * cfg.l2 * qrow);
    }
    const double loss = mean_loss(model, train);
    if (!std::isfinite(loss))
      throw TrainingError("LFM loss became non-finite at epoch " + std::to_string(epoch));
    result.train_loss.push_back(loss);
    const double monitored = use_holdout ? mean_loss(model, monitor) : loss;
    if (monitored < best) {
      best = monitored;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

double rating_score(const FactorModel& model, std::size_t u, std::size_t i) {
  if (u >= model.users() || i >= model.items())
    throw std::out_of_range("rating_score: user or item index out of range");
  return std::clamp(model.dot(u, i), 1.0, 5.0);
}

double lfm_loss(const FactorModel& model, const Dataset& data) {
  double total = 0.0;
  for (const auto& x : data.interactions) {
    const double e = model.dot(x.user, x.item) - x.rating;
    total += e * e;
  }
  return total;
}

FactorGradient interaction_gradient(const FactorModel& model, std::size_t u, std::size_t i,
                                    double rating, double l2) {
  const Eigen::VectorXd pu = model.P.row(static_cast<Eigen::Index>(u)).transpose();
  const Eigen::VectorXd qi = model.Q.row(static_cast<Eigen::Index>(i)).transpose();
  const double err = pu.dot(qi) - rating;
  return {2.0 * err * qi + 2.0 * l2 * pu, 2.0 * err * pu + 2.0 * l2 * qi};
}

namespace {

constexpr char kMagic[8] = {'M', 'M', 'D', 'L', 'F', 'M', '0', '1'};

void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void write_rows(std::ostream& out, const Eigen::MatrixXd& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
}

Eigen::MatrixXd read_rows(std::istream& in, std::uint64_t rows, std::uint64_t cols) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  return rm;
}

}  // namespace

void save_factor_model(const FactorModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_u64(out, model.users());
  write_u64(out, model.items());
  write_u64(out, model.dim());
  write_rows(out, model.P);
  write_rows(out, model.Q);
}

FactorModel load_factor_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw Error(path.string() + " is not an LFM checkpoint");
  const auto m = read_u64(in);
  const auto n = read_u64(in);
  const auto p = read_u64(in);
  FactorModel model;
  model.P = read_rows(in, m, p);
  model.Q = read_rows(in, n, p);
  if (!in) throw Error(path.string() + " is truncated");
  return model;
}

}  // namespace mmd
