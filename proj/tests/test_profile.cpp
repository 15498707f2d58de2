// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>

#include "mmd/error.hpp"
#include "mmd/profile.hpp"
#include "support.hpp"

using namespace mmd;
using mmd::test::rec;

TEST_CASE("sentiment_gap examples") {
  CHECK(sentiment_gap(5.0, 1.2) == doctest::Approx(3.8).epsilon(1e-15));
  CHECK(sentiment_gap(3.0, 3.0) == 0.0);
  CHECK(sentiment_gap(1.2, 5.0) == sentiment_gap(5.0, 1.2));
  CHECK_THROWS_AS(sentiment_gap(0.5, 3.0), Error);
  CHECK_THROWS_AS(sentiment_gap(3.0, 5.5), Error);
}

TEST_CASE("gap_vector examples") {
  const std::vector<double> one{0.5};
  const GapVector a = gap_vector(one, 3, 7);
  CHECK(a.user == 7);
  CHECK(a.support == 1);
  CHECK(a.values == Eigen::Vector3d(0.5, 0, 0));

  const std::vector<double> four{1, 3, 2, 4};
  const GapVector b = gap_vector(four, 2);
  CHECK(b.values == Eigen::Vector2d(4, 3));
  CHECK(b.support == 2);

  const GapVector c = gap_vector(std::vector<double>{}, 3);
  CHECK(c.values == Eigen::Vector3d::Zero());
  CHECK(c.support == 0);
  CHECK_THROWS_AS(gap_vector(four, 0), Error);
}

TEST_CASE("gap_vector is permutation invariant and padded with zeros") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = uniform_int(rng, 0, 25);
    std::vector<double> g(static_cast<std::size_t>(n));
    for (double& x : g) x = uniform(rng, 0.0, 4.0);
    const GapVector ref = gap_vector(g, 16);
    std::shuffle(g.begin(), g.end(), rng);
    const GapVector sh = gap_vector(g, 16);
    CHECK(sh.values == ref.values);
    CHECK(ref.support == std::min<std::size_t>(16, g.size()));
    for (Eigen::Index i = static_cast<Eigen::Index>(ref.support); i < 16; ++i) CHECK(ref.values(i) == 0.0);
    for (Eigen::Index i = 1; i < 16; ++i) CHECK(ref.values(i) <= ref.values(i - 1));
  }
}

TEST_CASE("candidate rule examples") {
  const std::vector<std::vector<double>> users{
      {4, 4, 4, 4, 4},          // all high
      {4, 4, 4, 1, 1},          // 0.6 < 0.7
      {},                       // no interactions
      {3.5, 3.5, 3.5, 3.5, 0},  // boundary 0.8, alpha inclusive
  };
  const CandidateSet s = candidate_set_from_gaps(users, 3.5, 0.7);
  CHECK(s.contains(0));
  CHECK_FALSE(s.contains(1));
  CHECK_FALSE(s.contains(2));
  CHECK(s.contains(3));
  CHECK(s.alpha_g == 3.5);
  CHECK(s.theta_mu == 0.7);
}

TEST_CASE("candidate_set agrees with an exhaustive recount on a random 20-user dataset") {
  Rng rng(21);
  std::vector<RawRecord> rs;
  for (int u = 0; u < 20; ++u) {
    const int n = uniform_int(rng, 1, 12);
    for (int i = 0; i < n; ++i)
      rs.push_back(rec("u" + std::to_string(u), "i" + std::to_string(i), uniform_int(rng, 1, 5), "x."));
  }
  const Dataset d = build_dataset(rs);
  std::vector<double> sr(d.interactions.size()), sv(d.interactions.size());
  for (std::size_t k = 0; k < sr.size(); ++k) {
    sr[k] = uniform(rng, 1.0, 5.0);
    sv[k] = uniform(rng, 1.0, 5.0);
  }
  for (double alpha : {0.5, 1.5, 2.5}) {
    for (double theta : {0.2, 0.5, 0.7}) {
      const CandidateSet got = candidate_set(d, sr, sv, alpha, theta);
      std::set<std::size_t> want;
      for (std::size_t u = 0; u < d.m; ++u) {
        int hit = 0, tot = 0;
        for (std::size_t k = 0; k < d.interactions.size(); ++k) {
          if (d.interactions[k].user != u) continue;
          ++tot;
          hit += std::abs(sr[k] - sv[k]) >= alpha;
        }
        if (tot > 0 && static_cast<double>(hit) / tot >= theta) want.insert(u);
      }
      CHECK(got.members == want);
    }
  }
}

TEST_CASE("raising either threshold never adds candidates") {
  Rng rng(8);
  std::vector<std::vector<double>> users(60);
  for (auto& g : users) {
    g.resize(static_cast<std::size_t>(uniform_int(rng, 1, 20)));
    for (double& x : g) x = uniform(rng, 0.0, 4.0);
  }
  const auto subset = [](const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  };
  for (double a = 0.0; a < 4.0; a += 0.25)
    for (double t = 0.1; t < 1.0; t += 0.1) {
      const auto base = candidate_set_from_gaps(users, a, t).members;
      CHECK(subset(candidate_set_from_gaps(users, a + 0.25, t).members, base));
      CHECK(subset(candidate_set_from_gaps(users, a, t + 0.1).members, base));
    }
}

TEST_CASE("gaps_by_user groups in interaction order and the audit csv is written") {
  const Dataset d = build_dataset({rec("a", "x", 5, "ok."), rec("b", "x", 1, "ok."), rec("a", "y", 2, "ok.")});
  const std::vector<double> sr{5, 1, 2}, sv{1, 1, 4.5};
  const auto g = interaction_gaps(sr, sv);
  CHECK(g == std::vector<double>{4, 0, 2.5});
  const auto by = gaps_by_user(d, g);
  CHECK(by[0] == std::vector<double>{4, 2.5});
  CHECK(by[1] == std::vector<double>{0});

  const auto dir = test::scratch("gaps");
  std::vector<GapVector> gv{gap_vector(by[0], 3, 0), gap_vector(by[1], 3, 1)};
  save_gap_vectors_csv(d, gv, candidate_set_from_gaps(by, 3.5, 0.5), dir / "gaps.csv");
  const std::string text = test::read_file(dir / "gaps.csv");
  CHECK(text.rfind("user,candidate,support,g0,g1,g2\n", 0) == 0);
  CHECK(text.find("\na,1,2,4,2.5,0\nb,0,1,0,0,0\n") != std::string::npos);
}
