// SPDX-License-Identifier: Apache-2.0
#include "mmd/eval.hpp"

#include <limits>

#include "mmd/error.hpp"
#include "mmd/profile.hpp"
#include "mmd/rng.hpp"

namespace mmd {

Confusion confusion(const std::vector<UserLabel>& predicted, const std::vector<UserLabel>& truth) {
  if (predicted.size() != truth.size()) throw ShapeError("prediction and truth cover different users");
  Confusion c;
  for (std::size_t u = 0; u < truth.size(); ++u) {
    const bool actual = truth[u] == UserLabel::Pmu;
    const bool flagged = predicted[u] == UserLabel::Pmu;
    if (actual && flagged) ++c.tp;
    else if (actual) ++c.fn;
    else if (flagged) ++c.fp;
    else ++c.tn;
  }
  return c;
}

Confusion confusion(const std::set<std::size_t>& detected, const std::vector<UserLabel>& truth) {
  std::vector<UserLabel> pred(truth.size(), UserLabel::Normal);
  for (std::size_t u : detected) {
    if (u >= truth.size()) throw ShapeError("detected user outside the evaluated universe");
    pred[u] = UserLabel::Pmu;
  }
  return confusion(pred, truth);
}

Rates sen_spe_f(const Confusion& c) {
  Rates r;
  if (c.tp + c.fn > 0) r.sen = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.tn + c.fp > 0) r.spe = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  if (r.sen && r.spe && *r.sen + *r.spe > 0.0) r.f = 2.0 * *r.sen * *r.spe / (*r.sen + *r.spe);
  return r;
}

std::optional<double> precision(const Confusion& c) {
  if (c.tp + c.fp == 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double f_or_zero(const Rates& r) { return r.f.value_or(0.0); }

std::vector<UserLabel> baseline_sod(const Dataset& data, std::span<const double> review_scores,
                                    double theta) {
  if (review_scores.size() != data.interactions.size())
    throw ShapeError("one review score per interaction required");
  std::vector<std::size_t> neg(data.m, 0), total(data.m, 0);
  for (std::size_t i = 0; i < data.interactions.size(); ++i) {
    const auto& x = data.interactions[i];
    ++total[x.user];
    if (x.rating <= 2 || review_scores[i] <= 2.0) ++neg[x.user];
  }
  std::vector<UserLabel> out(data.m, UserLabel::Normal);
  for (std::size_t u = 0; u < data.m; ++u)
    if (total[u] > 0 && static_cast<double>(neg[u]) >= theta * static_cast<double>(total[u]) - 1e-12)
      out[u] = UserLabel::Pmu;
  return out;
}

std::vector<double> mean_gap_per_user(const Dataset& data, std::span<const double> rating_scores,
                                      std::span<const double> review_scores) {
  const auto gaps = interaction_gaps(rating_scores, review_scores);
  std::vector<double> sum(data.m, 0.0);
  std::vector<std::size_t> cnt(data.m, 0);
  for (std::size_t i = 0; i < data.interactions.size(); ++i) {
    sum[data.interactions[i].user] += gaps[i];
    ++cnt[data.interactions[i].user];
  }
  for (std::size_t u = 0; u < data.m; ++u)
    if (cnt[u]) sum[u] /= static_cast<double>(cnt[u]);
  return sum;
}

KmeansppResult baseline_kmeanspp(const FactorModel& factors, std::span<const double> user_signal,
                                 std::uint64_t seed, const std::set<std::size_t>* candidates,
                                 std::size_t max_iter) {
  const auto& P = factors.P;
  const std::size_t m = factors.users();
  if (m < 2) throw ConfigError("k-means++ needs at least 2 users");
  if (user_signal.size() != m) throw ShapeError("one signal value per user required");
  Rng rng(seed);

  auto sq = [&](std::size_t u, const Eigen::VectorXd& c) {
    return (P.row(static_cast<Eigen::Index>(u)).transpose() - c).squaredNorm();
  };

  // k-means++ seeding
  Eigen::VectorXd cent[2];
  cent[0] = P.row(static_cast<Eigen::Index>(uniform_int(rng, 0, static_cast<int>(m) - 1))).transpose();
  {
    std::vector<double> w(m);
    double total = 0.0;
    for (std::size_t u = 0; u < m; ++u) total += w[u] = sq(u, cent[0]);
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = uniform(rng, 0.0, total);
      for (pick = 0; pick + 1 < m; ++pick) {
        r -= w[pick];
        if (r < 0.0) break;
      }
    } else {
      pick = (m > 1) ? 1 : 0;
    }
    cent[1] = P.row(static_cast<Eigen::Index>(pick)).transpose();
  }

  std::vector<int> assign(m, -1);
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t u = 0; u < m; ++u) {
      const int a = sq(u, cent[1]) < sq(u, cent[0]) ? 1 : 0;
      if (a != assign[u]) {
        assign[u] = a;
        changed = true;
      }
    }
    if (!changed) break;
    for (int c = 0; c < 2; ++c) {
      Eigen::VectorXd s = Eigen::VectorXd::Zero(P.cols());
      std::size_t n = 0;
      for (std::size_t u = 0; u < m; ++u)
        if (assign[u] == c) {
          s += P.row(static_cast<Eigen::Index>(u)).transpose();
          ++n;
        }
      if (n) cent[c] = s / static_cast<double>(n);
    }
  }

  KmeansppResult res;
  res.assignment = assign;
  if (candidates && !candidates->empty()) {
    std::size_t hits[2] = {0, 0}, sizes[2] = {0, 0};
    for (std::size_t u = 0; u < m; ++u) {
      ++sizes[assign[u]];
      if (candidates->count(u)) ++hits[assign[u]];
    }
    if (hits[0] != hits[1]) res.malicious_cluster = hits[0] > hits[1] ? 0 : 1;
    else res.malicious_cluster = sizes[1] < sizes[0] ? 1 : 0;
  } else {
    double sum[2] = {0, 0};
    std::size_t n[2] = {0, 0};
    for (std::size_t u = 0; u < m; ++u) {
      sum[assign[u]] += user_signal[u];
      ++n[assign[u]];
    }
    const double m0 = n[0] ? sum[0] / static_cast<double>(n[0]) : -std::numeric_limits<double>::infinity();
    const double m1 = n[1] ? sum[1] / static_cast<double>(n[1]) : -std::numeric_limits<double>::infinity();
    res.malicious_cluster = m1 > m0 ? 1 : 0;
  }
  res.labels.assign(m, UserLabel::Normal);
  for (std::size_t u = 0; u < m; ++u)
    if (assign[u] == res.malicious_cluster) res.labels[u] = UserLabel::Pmu;
  return res;
}

}  // namespace mmd
