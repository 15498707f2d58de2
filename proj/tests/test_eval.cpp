// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "mmd/error.hpp"
#include "mmd/eval.hpp"
#include "mmd/experiments.hpp"
#include "support.hpp"

using namespace mmd;
using mmd::test::rec;

namespace {

std::vector<UserLabel> labels(const std::string& bits) {
  std::vector<UserLabel> out;
  for (char c : bits) out.push_back(c == '1' ? UserLabel::Pmu : UserLabel::Normal);
  return out;
}

}  // namespace

TEST_CASE("confusion examples") {
  const auto truth = labels("110010");
  const auto pred = labels("100110");
  const Confusion c = confusion(pred, truth);
  CHECK(c.tp == 2);
  CHECK(c.fn == 1);
  CHECK(c.fp == 1);
  CHECK(c.tn == 2);
  CHECK(confusion(std::set<std::size_t>{0, 3, 4}, truth) == c);
  CHECK_THROWS_AS(confusion(labels("1"), truth), ShapeError);
  CHECK_THROWS_AS(confusion(std::set<std::size_t>{6}, truth), ShapeError);
}

TEST_CASE("confusion agrees with a brute count") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = uniform_int(rng, 1, 40);
    std::vector<UserLabel> t, p;
    for (int i = 0; i < m; ++i) {
      t.push_back(uniform(rng, 0.0, 1.0) < 0.3 ? UserLabel::Pmu : UserLabel::Normal);
      p.push_back(uniform(rng, 0.0, 1.0) < 0.3 ? UserLabel::Pmu : UserLabel::Normal);
    }
    std::size_t cnt[2][2] = {{0, 0}, {0, 0}};
    for (int i = 0; i < m; ++i) ++cnt[t[static_cast<std::size_t>(i)] == UserLabel::Pmu][p[static_cast<std::size_t>(i)] == UserLabel::Pmu];
    const Confusion c = confusion(p, t);
    CHECK(c.tp == cnt[1][1]);
    CHECK(c.fn == cnt[1][0]);
    CHECK(c.fp == cnt[0][1]);
    CHECK(c.tn == cnt[0][0]);
    CHECK(c.total() == static_cast<std::size_t>(m));
  }
}

TEST_CASE("rates for a published confusion matrix") {
  const Confusion c{23, 2, 1, 24};
  const Rates r = sen_spe_f(c);
  CHECK(*r.sen == doctest::Approx(0.92).epsilon(1e-12));
  CHECK(*r.spe == doctest::Approx(0.96).epsilon(1e-12));
  CHECK(*r.f == doctest::Approx(2 * 0.92 * 0.96 / 1.88).epsilon(1e-12));
  CHECK(*precision(c) == doctest::Approx(23.0 / 24).epsilon(1e-12));
}

TEST_CASE("undefined rates") {
  const Rates none = sen_spe_f(Confusion{0, 0, 3, 7});
  CHECK_FALSE(none.sen.has_value());
  CHECK(*none.spe == doctest::Approx(0.7));
  CHECK_FALSE(none.f.has_value());
  CHECK(f_or_zero(none) == 0.0);
  CHECK_FALSE(precision(Confusion{0, 4, 0, 4}).has_value());
  const Rates zero = sen_spe_f(Confusion{0, 5, 5, 0});
  CHECK(*zero.sen == 0.0);
  CHECK(*zero.spe == 0.0);
  CHECK_FALSE(zero.f.has_value());
  CHECK(format_value(std::nullopt) == "NA");
  CHECK(format_value(0.5) == "0.5");
}

TEST_CASE("SOD flags users with mostly negative feedback") {
  const Dataset d = build_dataset({rec("a", "x", 1, "r."), rec("a", "y", 2, "r."), rec("a", "z", 5, "r."),
                                   rec("b", "x", 5, "r."), rec("b", "y", 4, "r."),
                                   rec("c", "x", 5, "r."), rec("c", "y", 5, "r.")});
  // interactions keep file order
  const std::vector<double> sv{4, 4, 1.5, 4, 4, 2, 2};
  const auto out = baseline_sod(d, sv, 0.8);
  CHECK(out[0] == UserLabel::Pmu);    // 3 of 3
  CHECK(out[1] == UserLabel::Normal); // 0 of 2
  CHECK(out[2] == UserLabel::Pmu);    // 2 of 2 by review score
  const auto strict = baseline_sod(d, std::vector<double>{4, 4, 4, 4, 4, 4, 4}, 0.8);
  CHECK(strict[0] == UserLabel::Normal);  // 2 of 3 < 0.8
  CHECK(strict[2] == UserLabel::Normal);
  CHECK_THROWS_AS(baseline_sod(d, std::vector<double>{1, 2}, 0.8), ShapeError);
}

TEST_CASE("k-means++ separates two blobs and names the malicious one") {
  Rng rng(9);
  FactorModel f;
  f.P.resize(60, 3);
  f.Q = Eigen::MatrixXd::Zero(1, 3);
  std::vector<double> signal(60);
  for (Eigen::Index u = 0; u < 60; ++u) {
    const double centre = u < 20 ? 5.0 : -5.0;
    for (Eigen::Index d = 0; d < 3; ++d) f.P(u, d) = normal(rng, centre, 0.3);
    signal[static_cast<std::size_t>(u)] = u < 20 ? 3.0 : 0.5;
  }
  const auto r = baseline_kmeanspp(f, signal, 4);
  for (std::size_t u = 0; u < 60; ++u) CHECK((r.labels[u] == UserLabel::Pmu) == (u < 20));

  // candidate majority decides when candidates are given
  const std::set<std::size_t> cand{30, 31, 32};
  const auto c = baseline_kmeanspp(f, signal, 4, &cand);
  for (std::size_t u = 0; u < 60; ++u) CHECK((c.labels[u] == UserLabel::Pmu) == (u >= 20));

  const auto again = baseline_kmeanspp(f, signal, 4);
  CHECK(again.assignment == r.assignment);

  FactorModel one;
  one.P = Eigen::MatrixXd::Zero(1, 3);
  one.Q = Eigen::MatrixXd::Zero(1, 3);
  CHECK_THROWS_AS(baseline_kmeanspp(one, std::vector<double>{0.0}, 1), ConfigError);
}

TEST_CASE("mean gap per user") {
  const Dataset d = build_dataset({rec("a", "x", 1, "r."), rec("a", "y", 2, "r."), rec("b", "x", 5, "r.")});
  const auto g = mean_gap_per_user(d, std::vector<double>{1, 5, 3}, std::vector<double>{4, 4, 3});
  CHECK(g == std::vector<double>{2.0, 0.0});
}
