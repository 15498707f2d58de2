// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>

#include "mmd/error.hpp"
#include "mmd/lfm.hpp"
#include "support.hpp"

using namespace mmd;
using mmd::test::rec;

namespace {

FactorModel random_model(std::size_t m, std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  FactorModel f;
  f.P.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
  f.Q.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < f.P.size(); ++i) f.P.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < f.Q.size(); ++i) f.Q.data()[i] = normal(rng);
  return f;
}

double brute_dot(const FactorModel& f, std::size_t u, std::size_t i) {
  double s = 0;
  for (Eigen::Index d = 0; d < f.P.cols(); ++d)
    s += f.P(static_cast<Eigen::Index>(u), d) * f.Q(static_cast<Eigen::Index>(i), d);
  return s;
}

}  // namespace

TEST_CASE("single interaction fits a one-factor model") {
  const Dataset d = build_dataset({rec("u", "i", 3, "fine.")});
  LfmConfig c;
  c.dim = 1;
  c.lr = 0.05;
  c.epochs = 3000;
  c.l2 = 0;
  const auto r = train_lfm(d, c);
  CHECK(std::abs(r.model.dot(0, 0) - 3.0) < 0.05);
}

TEST_CASE("lr = 0 keeps the initialization; seeds are reproducible") {
  const Dataset d = generate_synthetic(test::small_synth(2, 20, 2));
  LfmConfig c;
  c.epochs = 0;
  const auto init = train_lfm(d, c);
  c.epochs = 5;
  c.lr = 0;
  const auto frozen = train_lfm(d, c);
  CHECK(frozen.model.P == init.model.P);
  CHECK(frozen.model.Q == init.model.Q);
  CHECK(init.model.P.cwiseAbs().maxCoeff() <= 0.01);

  c.lr = 0.01;
  const auto a = train_lfm(d, c);
  const auto b = train_lfm(d, c);
  CHECK(a.model.P == b.model.P);
  CHECK(a.model.Q == b.model.Q);
  CHECK(a.train_loss == b.train_loss);
}

TEST_CASE("rating_score examples") {
  FactorModel f;
  f.P = Eigen::MatrixXd::Zero(1, 4);
  f.Q = Eigen::MatrixXd::Ones(1, 4);
  CHECK(rating_score(f, 0, 0) == 1.0);
  f.P(0, 0) = 3.0;
  f.Q.setZero();
  f.Q(0, 0) = 1.0;
  CHECK(rating_score(f, 0, 0) == 3.0);
  CHECK_THROWS_AS(rating_score(f, 1, 0), std::out_of_range);

  const FactorModel g = random_model(5, 6, 4, 8);
  for (std::size_t u = 0; u < 5; ++u)
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(g.dot(u, i) == doctest::Approx(brute_dot(g, u, i)).epsilon(1e-14));
      const double s = rating_score(g, u, i);
      CHECK(s >= 1.0);
      CHECK(s <= 5.0);
      CHECK(s == std::clamp(brute_dot(g, u, i), 1.0, 5.0));
    }
}

TEST_CASE("lfm_loss examples") {
  const Dataset d = build_dataset({rec("u", "i", 3, "ok.")});
  FactorModel f;
  f.P = Eigen::MatrixXd::Constant(1, 1, 2.0);
  f.Q = Eigen::MatrixXd::Constant(1, 1, 1.5);
  CHECK(lfm_loss(f, d) == 0.0);
  f.Q(0, 0) = 2.0;
  CHECK(lfm_loss(f, d) == 1.0);

  const Dataset g = generate_synthetic(test::small_synth(5, 15, 2));
  const FactorModel h = random_model(g.m, g.n, 3, 4);
  double brute = 0;
  for (const auto& x : g.interactions) {
    const double e = brute_dot(h, x.user, x.item) - x.rating;
    brute += e * e;
  }
  CHECK(lfm_loss(h, g) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("interaction gradient matches central differences") {
  FactorModel f = random_model(3, 4, 8, 21);
  const double l2 = 1e-2;
  const std::size_t u = 1, i = 2;
  const double r = 4.0;
  const auto loss = [&] {
    const double e = f.dot(u, i) - r;
    return e * e + l2 * (f.P.row(1).squaredNorm() + f.Q.row(2).squaredNorm());
  };
  const FactorGradient g = interaction_gradient(f, u, i, r, l2);
  Rng rng(5);
  for (int s = 0; s < 20; ++s) {
    const int d = uniform_int(rng, 0, 7);
    const bool user_side = s % 2 == 0;
    double& x = user_side ? f.P(1, d) : f.Q(2, d);
    const double fd = test::central_diff(loss, x);
    const double an = user_side ? g.user(d) : g.item(d);
    CHECK(test::rel_err(an, fd) < 1e-4);
  }
}

TEST_CASE("training loss settles on synthetic data") {
  const Dataset d = generate_synthetic(test::small_synth(6, 40, 5));
  LfmConfig c;
  c.epochs = 200;
  const auto r = train_lfm(d, c);
  REQUIRE(r.train_loss.size() == 200);
  std::vector<double> ma;
  for (std::size_t e = 4; e < r.train_loss.size(); ++e) {
    double s = 0;
    for (std::size_t k = e - 4; k <= e; ++k) s += r.train_loss[k];
    ma.push_back(s / 5);
  }
  const std::size_t half = r.train_loss.size() / 2 - 4;
  for (std::size_t e = half + 1; e < ma.size(); ++e) CHECK(ma[e] <= ma[e - 1] + 1e-12);
  CHECK(r.train_loss.back() < r.train_loss.front());
  for (std::size_t u = 0; u < d.m; ++u)
    for (std::size_t i = 0; i < d.n; i += 7) {
      const double s = rating_score(r.model, u, i);
      CHECK((s >= 1.0 && s <= 5.0));
    }
}

TEST_CASE("holdout selects the kept epoch") {
  const Dataset d = generate_synthetic(test::small_synth(7, 20, 2));
  const auto parts = split(d, {0.8, 0.0, 0.2}, 1);
  LfmConfig c;
  c.epochs = 30;
  const auto r = train_lfm(parts.train, c, &parts.test);
  CHECK(r.best_epoch <= 30);
  LfmConfig k = c;
  k.epochs = 0;
  const auto init = train_lfm(parts.train, k, &parts.test);
  CHECK(lfm_loss(r.model, parts.test) <= lfm_loss(init.model, parts.test));
}

TEST_CASE("checkpoint round trip and errors") {
  const FactorModel f = random_model(4, 3, 5, 1);
  const auto dir = test::scratch("lfm");
  save_factor_model(f, dir / "m.bin");
  const FactorModel g = load_factor_model(dir / "m.bin");
  CHECK(g.P == f.P);
  CHECK(g.Q == f.Q);
  std::ofstream(dir / "junk.bin") << "nope";
  CHECK_THROWS_AS(load_factor_model(dir / "junk.bin"), Error);
  CHECK_THROWS_AS(train_lfm(Dataset{}, LfmConfig{}), TrainingError);
}
