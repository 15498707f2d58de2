// SPDX-License-Identifier: Apache-2.0
#include "mmd/recommender.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "mmd/error.hpp"
#include "mmd/parallel.hpp"
#include "mmd/rng.hpp"

namespace mmd {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using SparseRow = std::vector<std::pair<std::size_t, double>>;

const char* to_string(RecommenderKind kind) noexcept {
  switch (kind) {
    case RecommenderKind::Ubcf: return "UBCF";
    case RecommenderKind::Ibcf: return "IBCF";
    case RecommenderKind::MfEals: return "MF-eALS";
    case RecommenderKind::MfBpr: return "MF-BPR";
  }
  return "?";
}

RecommenderKind parse_recommender_kind(const std::string& text) {
  std::string t;
  for (char ch : text)
    if (std::isalnum(static_cast<unsigned char>(ch))) t += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (t == "ubcf") return RecommenderKind::Ubcf;
  if (t == "ibcf") return RecommenderKind::Ibcf;
  if (t == "mfeals" || t == "eals" || t == "als") return RecommenderKind::MfEals;
  if (t == "mfbpr" || t == "bpr") return RecommenderKind::MfBpr;
  throw ConfigError("unknown recommender '" + text + "' (UBCF, IBCF, MF-eALS, MF-BPR)");
}

double cosine_similarity(const SparseRow& a, const SparseRow& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [_, r] : a) na += r * r;
  for (const auto& [_, r] : b) nb += r * r;
  if (na == 0.0 || nb == 0.0) return 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first) ++i;
    else if (b[j].first < a[i].first) ++j;
    else dot += a[i++].second * b[j++].second;
  }
  return dot / std::sqrt(na * nb);
}

namespace {

std::vector<SparseRow> rows_by(const Dataset& d, bool by_user) {
  std::vector<SparseRow> rows(by_user ? d.m : d.n);
  for (const auto& x : d.interactions) {
    if (by_user) rows[x.user].emplace_back(x.item, x.rating);
    else rows[x.item].emplace_back(x.user, x.rating);
  }
  for (auto& r : rows) std::sort(r.begin(), r.end());
  return rows;
}

MatrixXd similarity_matrix(const std::vector<SparseRow>& rows) {
  const Index n = static_cast<Index>(rows.size());
  MatrixXd s = MatrixXd::Zero(n, n);
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b) s(a, b) = s(b, a) = cosine_similarity(rows[a], rows[b]);
  return s;
}

// Top-`k` most similar other rows with positive similarity; ties -> lower id.
std::vector<std::vector<std::size_t>> top_neighbours(const MatrixXd& sim, std::size_t k) {
  const std::size_t n = static_cast<std::size_t>(sim.rows());
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<std::size_t> cand;
    for (std::size_t b = 0; b < n; ++b)
      if (b != a && sim(a, b) > 0.0) cand.push_back(b);
    const std::size_t keep = std::min(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(), [&](std::size_t x, std::size_t y) {
      if (sim(a, x) != sim(a, y)) return sim(a, x) > sim(a, y);
      return x < y;
    });
    cand.resize(keep);
    out[a] = std::move(cand);
  }
  return out;
}

double lookup(const SparseRow& row, std::size_t id) {
  auto it = std::lower_bound(row.begin(), row.end(), std::make_pair(id, -1e300));
  return (it != row.end() && it->first == id) ? it->second : 0.0;
}

}  // namespace

UserCf::UserCf(const Dataset& train, std::size_t neighbors)
    : rows_(rows_by(train, true)), sim_(similarity_matrix(rows_)), nbrs_(top_neighbours(sim_, neighbors)) {}

double UserCf::similarity(std::size_t u, std::size_t v) const { return sim_(static_cast<Index>(u), static_cast<Index>(v)); }

double UserCf::score(std::size_t u, std::size_t i) const {
  if (u >= rows_.size()) return 0.0;
  double num = 0.0, den = 0.0;
  for (std::size_t v : nbrs_[u]) {
    const double r = lookup(rows_[v], i);
    const double s = similarity(u, v);
    den += std::abs(s);
    num += s * r;
  }
  return den > 0.0 ? num / den : 0.0;
}

ItemCf::ItemCf(const Dataset& train, std::size_t neighbors) : user_rows_(rows_by(train, true)) {
  const auto item_rows = rows_by(train, false);
  sim_ = similarity_matrix(item_rows);
  nbrs_ = top_neighbours(sim_, neighbors);
}

double ItemCf::similarity(std::size_t i, std::size_t j) const { return sim_(static_cast<Index>(i), static_cast<Index>(j)); }

double ItemCf::score(std::size_t u, std::size_t i) const {
  if (u >= user_rows_.size() || i >= nbrs_.size()) return 0.0;
  double num = 0.0, den = 0.0;
  for (std::size_t j : nbrs_[i]) {
    const double r = lookup(user_rows_[u], j);
    const double s = similarity(i, j);
    den += std::abs(s);
    num += s * r;
  }
  return den > 0.0 ? num / den : 0.0;
}

FactorRecommender::FactorRecommender(RecommenderKind kind, MatrixXd P, MatrixXd Q, VectorXd bias)
    : kind_(kind), P_(std::move(P)), Q_(std::move(Q)), bias_(std::move(bias)) {}

double FactorRecommender::score(std::size_t u, std::size_t i) const {
  const Index ui = static_cast<Index>(u), ii = static_cast<Index>(i);
  if (ui >= P_.rows() || ii >= Q_.rows()) return 0.0;
  double s = P_.row(ui).dot(Q_.row(ii));
  if (bias_.size()) s += bias_(ii);
  return s;
}

std::unique_ptr<FactorRecommender> train_als(const Dataset& train, const RecommenderConfig& cfg) {
  const Index d = static_cast<Index>(cfg.dim);
  Rng rng(cfg.seed);
  MatrixXd P(static_cast<Index>(train.m), d), Q(static_cast<Index>(train.n), d);
  for (Index r = 0; r < P.rows(); ++r)
    for (Index c = 0; c < d; ++c) P(r, c) = normal(rng, 0.0, 0.1);
  for (Index r = 0; r < Q.rows(); ++r)
    for (Index c = 0; c < d; ++c) Q(r, c) = normal(rng, 0.0, 0.1);
  const auto urows = rows_by(train, true);
  const auto irows = rows_by(train, false);
  const MatrixXd reg = cfg.als_l2 * MatrixXd::Identity(d, d);

  auto solve = [&](MatrixXd& X, const MatrixXd& Y, const std::vector<SparseRow>& rows) {
    for (std::size_t a = 0; a < rows.size(); ++a) {
      if (rows[a].empty()) continue;
      MatrixXd G = reg;
      VectorXd b = VectorXd::Zero(d);
      for (const auto& [j, r] : rows[a]) {
        const auto y = Y.row(static_cast<Index>(j)).transpose();
        G.noalias() += y * y.transpose();
        b += r * y;
      }
      X.row(static_cast<Index>(a)) = G.ldlt().solve(b).transpose();
    }
  };
  for (std::size_t it = 0; it < cfg.als_iterations; ++it) {
    solve(P, Q, urows);
    solve(Q, P, irows);
    if (!P.allFinite() || !Q.allFinite())
      throw TrainingError("ALS diverged at iteration " + std::to_string(it + 1));
  }
  return std::make_unique<FactorRecommender>(RecommenderKind::MfEals, std::move(P), std::move(Q), VectorXd());
}

std::unique_ptr<FactorRecommender> train_bpr(const Dataset& train, const RecommenderConfig& cfg) {
  const Index d = static_cast<Index>(cfg.dim);
  Rng rng(cfg.seed);
  MatrixXd P(static_cast<Index>(train.m), d), Q(static_cast<Index>(train.n), d);
  for (Index r = 0; r < P.rows(); ++r)
    for (Index c = 0; c < d; ++c) P(r, c) = normal(rng, 0.0, 0.1);
  for (Index r = 0; r < Q.rows(); ++r)
    for (Index c = 0; c < d; ++c) Q(r, c) = normal(rng, 0.0, 0.1);
  VectorXd bias = VectorXd::Zero(static_cast<Index>(train.n));
  MatrixXd accP = MatrixXd::Constant(P.rows(), d, cfg.adagrad_init);
  MatrixXd accQ = MatrixXd::Constant(Q.rows(), d, cfg.adagrad_init);
  VectorXd accB = VectorXd::Constant(bias.size(), cfg.adagrad_init);
  if (train.n < 2) return std::make_unique<FactorRecommender>(RecommenderKind::MfBpr, P, Q, bias);

  const auto urows = rows_by(train, true);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& x : train.interactions) pairs.emplace_back(x.user, x.item);

  auto step = [&](auto row, auto acc, const VectorXd& g) {
    acc.array() += g.array().square();
    row.array() -= cfg.bpr_lr * g.array() / acc.array().sqrt();
  };
  for (std::size_t epoch = 1; epoch <= cfg.bpr_epochs; ++epoch) {
    std::shuffle(pairs.begin(), pairs.end(), rng);
    double loss = 0.0;
    for (const auto& [u, i] : pairs) {
      if (urows[u].size() >= train.n) continue;
      std::size_t j;
      do {
        j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(train.n) - 1));
      } while (lookup(urows[u], j) != 0.0);
      const Index ui = static_cast<Index>(u), ii = static_cast<Index>(i), ji = static_cast<Index>(j);
      const VectorXd pu = P.row(ui).transpose();
      const VectorXd qi = Q.row(ii).transpose();
      const VectorXd qj = Q.row(ji).transpose();
      const double x = pu.dot(qi - qj) + bias(ii) - bias(ji);
      const double sig = 1.0 / (1.0 + std::exp(x));  // sigmoid(-x)
      loss += std::log1p(std::exp(-x));
      // minimise -log sigmoid(x) + l2 (|p|^2 + |q_i|^2 + |q_j|^2)
      const VectorXd gp = -sig * (qi - qj) + 2.0 * cfg.bpr_l2 * pu;
      const VectorXd gi = -sig * pu + 2.0 * cfg.bpr_l2 * qi;
      const VectorXd gj = sig * pu + 2.0 * cfg.bpr_l2 * qj;
      step(P.row(ui).transpose(), accP.row(ui).transpose(), gp);
      step(Q.row(ii).transpose(), accQ.row(ii).transpose(), gi);
      step(Q.row(ji).transpose(), accQ.row(ji).transpose(), gj);
      const double gbi = -sig + 2.0 * cfg.bpr_l2 * bias(ii);
      const double gbj = sig + 2.0 * cfg.bpr_l2 * bias(ji);
      accB(ii) += gbi * gbi;
      bias(ii) -= cfg.bpr_lr * gbi / std::sqrt(accB(ii));
      accB(ji) += gbj * gbj;
      bias(ji) -= cfg.bpr_lr * gbj / std::sqrt(accB(ji));
    }
    if (!std::isfinite(loss)) throw TrainingError("BPR diverged at epoch " + std::to_string(epoch));
  }
  return std::make_unique<FactorRecommender>(RecommenderKind::MfBpr, std::move(P), std::move(Q), std::move(bias));
}

std::unique_ptr<Recommender> train_recommender(RecommenderKind kind, const Dataset& train,
                                               const RecommenderConfig& cfg) {
  if (train.interactions.empty()) throw Error("cannot train a recommender on an empty set");
  switch (kind) {
    case RecommenderKind::Ubcf: return std::make_unique<UserCf>(train, cfg.neighbors);
    case RecommenderKind::Ibcf: return std::make_unique<ItemCf>(train, cfg.neighbors);
    case RecommenderKind::MfEals: return train_als(train, cfg);
    case RecommenderKind::MfBpr: return train_bpr(train, cfg);
  }
  throw ConfigError("unknown recommender kind");
}

double ndcg_contribution(std::size_t rank, std::size_t n) {
  if (rank == 0 || rank > n) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

RankingResult summarize_ranks(std::vector<RankRecord> records, const std::vector<std::size_t>& n_list,
                              std::size_t skipped) {
  RankingResult res;
  res.n_list = n_list;
  res.skipped = skipped;
  res.hr.assign(n_list.size(), 0.0);
  res.ndcg.assign(n_list.size(), 0.0);
  for (const auto& r : records)
    for (std::size_t k = 0; k < n_list.size(); ++k) {
      if (r.rank <= n_list[k]) res.hr[k] += 1.0;
      res.ndcg[k] += ndcg_contribution(r.rank, n_list[k]);
    }
  if (!records.empty())
    for (std::size_t k = 0; k < n_list.size(); ++k) {
      res.hr[k] /= static_cast<double>(records.size());
      res.ndcg[k] /= static_cast<double>(records.size());
    }
  res.records = std::move(records);
  return res;
}

RankingResult rank_eval(const Recommender& rec, const Dataset& train, const Dataset& test,
                        const std::vector<std::size_t>& n_list, std::size_t negatives,
                        std::uint64_t seed, unsigned threads) {
  const std::size_t n_items = std::max(train.n, test.n);
  std::vector<std::vector<char>> seen(std::max(train.m, test.m));
  auto mark = [&](const Dataset& d) {
    for (const auto& x : d.interactions) {
      auto& s = seen[x.user];
      if (s.empty()) s.assign(n_items, 0);
      s[x.item] = 1;
    }
  };
  mark(train);
  mark(test);

  const auto& tests = test.interactions;
  std::vector<RankRecord> recs(tests.size());
  std::vector<char> ok(tests.size(), 0);
  parallel_for(tests.size(), threads, [&](std::size_t t) {
    const auto& x = tests[t];
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < n_items; ++i)
      if (!seen[x.user][i]) pool.push_back(i);
    if (pool.empty()) return;
    Rng rng(splitmix64(seed ^ splitmix64(t)));
    const std::size_t take = std::min(negatives, pool.size());
    for (std::size_t a = 0; a < take; ++a) {
      const auto b = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(a), static_cast<int>(pool.size()) - 1));
      std::swap(pool[a], pool[b]);
    }
    const double pos = rec.score(x.user, x.item);
    std::size_t rank = 1;
    for (std::size_t a = 0; a < take; ++a)
      if (rec.score(x.user, pool[a]) >= pos) ++rank;
    recs[t] = {x.user, x.item, rank};
    ok[t] = 1;
  });
  std::vector<RankRecord> kept;
  std::size_t skipped = 0;
  for (std::size_t t = 0; t < tests.size(); ++t) {
    if (ok[t]) kept.push_back(recs[t]);
    else ++skipped;
  }
  return summarize_ranks(std::move(kept), n_list, skipped);
}

}  // namespace mmd
