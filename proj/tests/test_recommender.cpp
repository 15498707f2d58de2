// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "mmd/error.hpp"
#include "mmd/experiments.hpp"
#include "mmd/recommender.hpp"
#include "support.hpp"

using namespace mmd;
using mmd::test::rec;

namespace {

// Scores from a fixed table; unknown pairs score 0.
class TableRecommender : public Recommender {
 public:
  explicit TableRecommender(Eigen::MatrixXd s) : s_(std::move(s)) {}
  double score(std::size_t u, std::size_t i) const override {
    return s_(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i));
  }
  RecommenderKind kind() const override { return RecommenderKind::Ubcf; }

 private:
  Eigen::MatrixXd s_;
};

// Two groups of users that each interact only with their own half of the items.
Dataset planted(int users, int items, int per_user, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RawRecord> rs;
  // name every item first so ids follow numbering
  for (int i = 0; i < items; ++i) rs.push_back(rec("seed" + std::to_string(i % 2), "i" + std::to_string(i), 3, "x."));
  for (int u = 0; u < users; ++u) {
    const int g = u % 2;
    std::set<int> picked;
    while (static_cast<int>(picked.size()) < per_user) picked.insert(2 * uniform_int(rng, 0, items / 2 - 1) + g);
    for (int i : picked) rs.push_back(rec("u" + std::to_string(u), "i" + std::to_string(i), 4, "x."));
  }
  return build_dataset(rs);
}

}  // namespace

TEST_CASE("cosine similarity examples") {
  using Row = std::vector<std::pair<std::size_t, double>>;
  CHECK(cosine_similarity(Row{{0, 1}, {2, 1}}, Row{{0, 1}, {2, 1}}) == doctest::Approx(1.0));
  CHECK(cosine_similarity(Row{{0, 1}}, Row{{1, 1}}) == 0.0);
  CHECK(cosine_similarity(Row{}, Row{{1, 1}}) == 0.0);
  CHECK(cosine_similarity(Row{{0, 3}, {1, 4}}, Row{{0, 4}, {1, 3}}) == doctest::Approx(24.0 / 25));
}

TEST_CASE("user-based CF on a toy matrix") {
  // a and b rate x, y identically; c only overlaps on y
  const Dataset d = build_dataset({rec("a", "x", 5, "r."), rec("a", "y", 3, "r."), rec("b", "x", 5, "r."),
                                   rec("b", "y", 3, "r."), rec("b", "z", 4, "r."), rec("c", "y", 1, "r."),
                                   rec("c", "w", 2, "r.")});
  const UserCf cf(d, 1);
  CHECK(cf.similarity(0, 1) == doctest::Approx((5.0 * 5 + 3 * 3) / std::sqrt(34.0 * 50.0)));
  CHECK(cf.neighbours(0) == std::vector<std::size_t>{1});
  CHECK(cf.score(0, 2) == doctest::Approx(4.0));  // only neighbour b rated z
  CHECK(cf.score(0, 3) == 0.0);                   // w is rated by c, not a neighbour
  const UserCf two(d, 2);
  CHECK(two.score(0, 3) == doctest::Approx(two.similarity(0, 2) * 2 / (two.similarity(0, 1) + two.similarity(0, 2))));
  const UserCf wide(d, 5);
  const double sab = wide.similarity(0, 1), sac = wide.similarity(0, 2);
  CHECK(sac == doctest::Approx(3.0 / std::sqrt(34.0 * 5.0)));
  CHECK(wide.score(0, 1) == doctest::Approx((sab * 3 + sac * 1) / (sab + sac)));

  const Dataset same = build_dataset({rec("a", "x", 2, "r."), rec("a", "y", 4, "r."), rec("b", "x", 2, "r."),
                                      rec("b", "y", 4, "r.")});
  CHECK(UserCf(same, 3).similarity(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("item-based CF averages the user's ratings of similar items") {
  const Dataset d = build_dataset({rec("a", "x", 4, "r."), rec("a", "y", 2, "r."), rec("b", "x", 5, "r."),
                                   rec("b", "y", 1, "r."), rec("b", "z", 5, "r."), rec("c", "z", 3, "r.")});
  const ItemCf cf(d, 5);
  const double sxy = cf.similarity(0, 1), sxz = cf.similarity(0, 2);
  CHECK(sxy == doctest::Approx((4.0 * 2 + 5 * 1) / std::sqrt(41.0 * 5.0)));
  CHECK(sxz == doctest::Approx(25.0 / std::sqrt(41.0 * 34.0)));
  // a has rated both of z's neighbours
  const double syz = cf.similarity(1, 2);
  CHECK(cf.score(0, 2) == doctest::Approx((sxz * 4 + syz * 2) / (sxz + syz)));
  // c rated only z; the other neighbour counts as 0
  CHECK(cf.score(2, 1) == doctest::Approx(syz * 3 / (sxy + syz)));
  CHECK(cf.score(2, 0) == doctest::Approx(sxz * 3 / (sxy + sxz)));
  CHECK(ItemCf(d, 1).score(2, 1) == 0.0);  // y's single neighbour is x
}

TEST_CASE("BPR ranks in-group items above out-of-group items") {
  const Dataset d = planted(60, 40, 8, 3);
  RecommenderConfig c;
  c.dim = 8;
  c.bpr_epochs = 40;
  c.seed = 2;
  const auto m = train_bpr(d, c);
  std::size_t wins = 0, total = 0;
  for (std::size_t u = 2; u < d.m; ++u) {
    const std::size_t g = (u - 2) % 2;
    for (std::size_t i = 0; i < d.n; ++i)
      for (std::size_t j = 0; j < d.n; ++j) {
        if (i % 2 != g || j % 2 == g) continue;
        ++total;
        wins += m->score(u, i) > m->score(u, j);
      }
  }
  const double auc = static_cast<double>(wins) / static_cast<double>(total);
  CHECK(auc > 0.8);
  const auto again = train_bpr(d, c);
  CHECK(again->P() == m->P());
}

TEST_CASE("ALS fits observed ratings") {
  const Dataset d = planted(30, 20, 6, 5);
  RecommenderConfig c;
  c.dim = 4;
  c.als_l2 = 0.01;
  const auto m = train_als(d, c);
  double err = 0.0;
  for (const auto& x : d.interactions) err += std::abs(m->score(x.user, x.item) - x.rating);
  CHECK(err / static_cast<double>(d.interactions.size()) < 0.3);
  CHECK_THROWS_AS(train_recommender(RecommenderKind::MfEals, Dataset{}, c), Error);
}

TEST_CASE("recommender names round trip") {
  for (auto k : {RecommenderKind::Ubcf, RecommenderKind::Ibcf, RecommenderKind::MfEals, RecommenderKind::MfBpr})
    CHECK(parse_recommender_kind(to_string(k)) == k);
  CHECK(parse_recommender_kind("bpr") == RecommenderKind::MfBpr);
  CHECK_THROWS_AS(parse_recommender_kind("svd"), ConfigError);
}

TEST_CASE("ranking metrics") {
  CHECK(ndcg_contribution(1, 5) == 1.0);
  CHECK(ndcg_contribution(3, 5) == doctest::Approx(0.5));
  CHECK(ndcg_contribution(6, 5) == 0.0);
  CHECK(ndcg_contribution(0, 5) == 0.0);

  // one user, ten items; item 0 is the held-out positive
  std::vector<RawRecord> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(rec("u", "i" + std::to_string(i), 4, "x."));
  const Dataset all = build_dataset(rs);
  Dataset train = all, test = all;
  train.interactions.assign(all.interactions.begin() + 1, all.interactions.begin() + 5);
  test.interactions.assign(all.interactions.begin(), all.interactions.begin() + 1);

  SUBCASE("perfect recommender") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(1, 10);
    s(0, 0) = 1.0;
    const auto r = rank_eval(TableRecommender(s), train, test, {5, 15}, 99, 1);
    CHECK(r.records.size() == 1);
    CHECK(r.records[0].rank == 1);
    CHECK(r.hr == std::vector<double>{1.0, 1.0});
    CHECK(r.ndcg == std::vector<double>{1.0, 1.0});
  }
  SUBCASE("two unseen items outrank the positive") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(1, 10);
    s(0, 0) = 1.0;
    s(0, 7) = s(0, 8) = 2.0;
    const auto r = rank_eval(TableRecommender(s), train, test, {5}, 99, 1);
    CHECK(r.records[0].rank == 3);
    CHECK(r.ndcg[0] == doctest::Approx(0.5));
    CHECK(r.hr[0] == 1.0);
    const auto two = rank_eval(TableRecommender(s), train, test, {2}, 99, 1);
    CHECK(two.hr[0] == 0.0);
  }
  SUBCASE("ties count against the positive") {
    const auto r = rank_eval(TableRecommender(Eigen::MatrixXd::Zero(1, 10)), train, test, {5}, 99, 1);
    CHECK(r.records[0].rank == 6);  // five unseen negatives
    CHECK(r.hr[0] == 0.0);
  }
  SUBCASE("no unseen item") {
    Dataset full = all;
    full.interactions.assign(all.interactions.begin() + 1, all.interactions.end());
    const auto r = rank_eval(TableRecommender(Eigen::MatrixXd::Zero(1, 10)), full, test, {5}, 99, 1);
    CHECK(r.skipped == 1);
    CHECK(r.records.empty());
  }
}

TEST_CASE("summarize_ranks against an independent average") {
  Rng rng(6);
  std::vector<RankRecord> recs;
  for (int t = 0; t < 200; ++t) recs.push_back({0, 0, static_cast<std::size_t>(uniform_int(rng, 1, 100))});
  const auto r = summarize_ranks(recs, {5, 15});
  for (std::size_t k = 0; k < 2; ++k) {
    const std::size_t n = k ? 15 : 5;
    double hr = 0, nd = 0;
    for (const auto& x : recs)
      if (x.rank <= n) {
        hr += 1;
        nd += std::log(2.0) / std::log(static_cast<double>(x.rank) + 1.0);
      }
    CHECK(r.hr[k] == doctest::Approx(hr / 200).epsilon(1e-12));
    CHECK(r.ndcg[k] == doctest::Approx(nd / 200).epsilon(1e-12));
  }
}

TEST_CASE("enhancement rows and the empty-detector control") {
  const Dataset d = generate_synthetic(test::small_synth(4, 40, 5));
  EnhancementConfig c;
  c.kinds = {RecommenderKind::Ubcf, RecommenderKind::MfBpr};
  c.recommender.dim = 8;
  c.recommender.bpr_epochs = 3;
  c.negatives = 30;
  const auto rows = enhancement_experiment(d, {}, c, 7);
  REQUIRE(rows.size() == c.kinds.size() * c.n_list.size() * 2);
  const std::size_t half = rows.size() / 2;
  for (std::size_t k = 0; k < half; ++k) {
    CHECK(rows[k].arm == "detected");
    CHECK(rows[k + half].arm == "random");
    CHECK(rows[k].hr == rows[k + half].hr);
    CHECK(rows[k].ndcg == rows[k + half].ndcg);
    CHECK(rows[k].dropped == 0);
  }
  const auto dropped = enhancement_experiment(d, {0, 1, 2}, c, 7);
  for (const auto& r : dropped) {
    CHECK(r.dropped == 3);
    CHECK((r.hr >= 0.0 && r.hr <= 1.0));
    CHECK(r.ndcg <= r.hr + 1e-12);
  }
}
