// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "mmd/error.hpp"
#include "mmd/sentiment.hpp"
#include "support.hpp"

using namespace mmd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using mmd::test::rec;

namespace {

void jitter(HdanParams& p, std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (auto block : p.blocks())
    for (double& v : block) v += normal(rng, 0.0, scale);
}

GruParams random_gru(Eigen::Index in, Eigen::Index hid, std::uint64_t seed) {
  Rng rng(seed);
  auto fill = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng, 0.0, 0.5);
  };
  GruParams g = GruParams::zeros(in, hid);
  for (auto* m : {&g.W_update, &g.U_update, &g.W_reset, &g.U_reset, &g.W_cand, &g.U_cand}) fill(*m);
  for (auto* v : {&g.b_update, &g.b_reset, &g.b_cand}) fill(*v);
  return g;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar loops over the gate equations, no Eigen products.
std::vector<double> brute_gru(const GruParams& p, const std::vector<double>& xhat, const std::vector<double>& h) {
  const auto H = static_cast<std::size_t>(p.hidden_dim());
  const std::size_t X = xhat.size();
  auto affine = [&](const MatrixXd& W, const MatrixXd& U, const VectorXd& b, std::size_t r, bool gate_uh,
                    double reset) {
    double s = b(static_cast<Eigen::Index>(r));
    for (std::size_t c = 0; c < X; ++c) s += W(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * xhat[c];
    double uh = 0;
    for (std::size_t c = 0; c < H; ++c) uh += U(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * h[c];
    return s + (gate_uh ? reset * uh : uh);
  };
  std::vector<double> out(H);
  for (std::size_t r = 0; r < H; ++r) {
    const double z = sig(affine(p.W_update, p.U_update, p.b_update, r, false, 1));
    const double re = sig(affine(p.W_reset, p.U_reset, p.b_reset, r, false, 1));
    const double cand = std::tanh(affine(p.W_cand, p.U_cand, p.b_cand, r, true, re));
    out[r] = (1 - z) * h[r] + z * cand;
  }
  return out;
}

Dataset toy_corpus() {
  const char* pos[] = {"excellent", "amazing", "perfect", "superb", "good"};
  const char* neg[] = {"terrible", "awful", "useless", "broken", "poor"};
  std::vector<RawRecord> rs;
  for (int i = 0; i < 10; ++i) {
    rs.push_back(rec("u" + std::to_string(i), "p" + std::to_string(i), 5,
                     std::string("the item is ") + pos[i % 5] + " and " + pos[(i + 2) % 5] + "."));
    rs.push_back(rec("u" + std::to_string(i), "n" + std::to_string(i), 1,
                     std::string("the item is ") + neg[i % 5] + " and " + neg[(i + 3) % 5] + "."));
  }
  return build_dataset(rs);
}

}  // namespace

TEST_CASE("build_vocab examples") {
  CHECK(build_vocab(Dataset{}, 1).size() == 0);
  const Dataset d = build_dataset({rec("a", "x", 3, "good good bad")});
  const Vocab v2 = build_vocab(d, 2);
  CHECK(v2.size() == 1);
  CHECK(v2.lookup("good") == 1);
  CHECK(v2.lookup("bad") == Vocab::kUnknown);
  const Vocab v1 = build_vocab(d, 1);
  CHECK(v1.size() == 2);
  CHECK(v1.lookup("bad") != Vocab::kUnknown);
  CHECK(v1.lookup("good") != v1.lookup("bad"));
  for (std::size_t i = 1; i <= v1.size(); ++i) CHECK(v1.lookup(v1.tokens[i]) == i);
}

TEST_CASE("gru_step examples") {
  const GruParams zero = GruParams::zeros(3, 4);
  const VectorXd y = VectorXd::LinSpaced(3, -1, 1);
  const VectorXd h = VectorXd::LinSpaced(4, 0.5, 2);
  CHECK(gru_step(zero, y, y, y, h).isApprox(0.5 * h, 1e-15));
  CHECK(gru_step(zero, y, y, y, VectorXd::Zero(4)).isZero(0));

  const GruParams g = random_gru(2, 3, 4);
  Rng rng(9);
  VectorXd a(2), b(2), c(2), hp(3);
  for (auto* v : {&a, &b, &c, &hp})
    for (Eigen::Index i = 0; i < v->size(); ++i) (*v)(i) = normal(rng);
  const VectorXd got = gru_step(g, a, b, c, hp);
  const auto want = brute_gru(g, {a(0), a(1), b(0), b(1), c(0), c(1)}, {hp(0), hp(1), hp(2)});
  for (int i = 0; i < 3; ++i) CHECK(got(i) == doctest::Approx(want[static_cast<std::size_t>(i)]).epsilon(1e-13));

  CHECK_THROWS_AS(gru_step(g, VectorXd::Zero(3), b, c, hp), ShapeError);
  CHECK_THROWS_AS(gru_step(g, a, b, c, VectorXd::Zero(2)), ShapeError);
}

TEST_CASE("gru_step with zero neighbours only reads the middle third") {
  GruParams g = random_gru(3, 4, 1);
  GruParams other = g;
  for (auto* W : {&other.W_update, &other.W_reset, &other.W_cand}) {
    W->leftCols(3).setConstant(7.0);
    W->rightCols(3).setConstant(-5.0);
  }
  const VectorXd y = VectorXd::LinSpaced(3, 0.2, 0.9);
  const VectorXd h = VectorXd::LinSpaced(4, -0.3, 0.4);
  const VectorXd z = VectorXd::Zero(3);
  CHECK(gru_step(g, z, y, z, h) == gru_step(other, z, y, z, h));
}

TEST_CASE("attention_pool examples") {
  AttentionParams a = AttentionParams::zeros(3);
  MatrixXd one(1, 3);
  one << 1, -2, 0.5;
  const Pooled p1 = attention_pool(one, a);
  CHECK(p1.weights.size() == 1);
  CHECK(p1.weights(0) == 1.0);
  CHECK(p1.vector == one.row(0).transpose());

  MatrixXd seq(4, 3);
  seq << 1, 2, 3, 0, 0, 1, -1, 4, 2, 5, 5, 5;
  const Pooled u = attention_pool(seq, a);
  for (int t = 0; t < 4; ++t) CHECK(u.weights(t) == doctest::Approx(0.25).epsilon(1e-15));

  Rng rng(3);
  a.W = MatrixXd::NullaryExpr(3, 3, [&] { return normal(rng); });
  a.b = VectorXd::NullaryExpr(3, [&] { return normal(rng); });
  a.context = VectorXd::NullaryExpr(3, [&] { return normal(rng); });
  MatrixXd s3 = MatrixXd::NullaryExpr(3, 3, [&] { return normal(rng); });
  const Pooled p = attention_pool(s3, a);
  CHECK(std::abs(p.weights.sum() - 1.0) <= 1e-12);
  CHECK((p.weights.array() >= 0).all());
  // independent softmax and weighted sum
  double logits[3], mx = -1e300, z = 0;
  for (int t = 0; t < 3; ++t) {
    double l = 0;
    for (int j = 0; j < 3; ++j) {
      double pre = a.b(j);
      for (int k = 0; k < 3; ++k) pre += a.W(j, k) * s3(t, k);
      l += std::tanh(pre) * a.context(j);
    }
    logits[t] = l;
    mx = std::max(mx, l);
  }
  for (double l : logits) z += std::exp(l - mx);
  for (int j = 0; j < 3; ++j) {
    double v = 0;
    for (int t = 0; t < 3; ++t) v += std::exp(logits[t] - mx) / z * s3(t, j);
    CHECK(p.vector(j) == doctest::Approx(v).epsilon(1e-13));
  }
  CHECK_THROWS_AS(attention_pool(MatrixXd(0, 3), a), Error);
}

TEST_CASE("score_review range, purity and shapes") {
  const Dataset d = toy_corpus();
  SentimentDims dims{6, 5, 16, 32};
  SentimentModel m = init_sentiment_model(build_vocab(d, 1), dims, 4);
  jitter(m.params, 8, 0.5);
  for (const char* text : {"excellent.", "the item is awful and poor. it is good!",
                           "unknown words only here. and another one. and more"}) {
    const double s = score_review(m, std::string(text));
    CHECK(s > 1.0);
    CHECK(s < 5.0);
    CHECK(score_review(m, std::string(text)) == s);
  }
  CHECK_THROWS_AS(score_review(m, std::string("...")), Error);
  // sentence and word caps
  m.dims.max_sentences = 2;
  m.dims.max_words = 3;
  const auto enc = encode_review(m, tokenize("a b c d e. f g. h i j k."));
  REQUIRE(enc.size() == 2);
  CHECK(enc[0].size() == 3);
  CHECK(enc[1].size() == 2);
}

TEST_CASE("review gradient matches central differences at 30 coordinates") {
  const Dataset d = toy_corpus();
  SentimentModel m = init_sentiment_model(build_vocab(d, 1), SentimentDims{4, 3, 16, 32}, 12);
  jitter(m.params, 13, 0.4);
  const EncodedReview review = encode_review(m, tokenize("the item is excellent and broken. perfect! awful and good."));
  const double rating = 2.0;

  HdanParams grad = HdanParams::zeros_like(m.params);
  review_loss_and_grad(m, review, rating, grad);
  auto blocks = m.params.blocks();
  const auto gblocks = std::as_const(grad).blocks();
  const auto names = m.params.block_names();
  const auto loss = [&] { return review_loss(m, review, rating).loss; };

  std::vector<std::size_t> used_rows;
  for (const auto& s : review) used_rows.insert(used_rows.end(), s.begin(), s.end());
  const auto rows = static_cast<std::size_t>(m.params.embedding.rows());

  Rng rng(77);
  int checked = 0;
  for (int s = 0; s < 30; ++s) {
    const std::size_t b = static_cast<std::size_t>(s) % blocks.size();
    std::size_t idx;
    if (b == 0) {
      // column-major embedding: element (row, col) sits at col * rows + row
      const std::size_t row = used_rows[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(used_rows.size()) - 1))];
      const std::size_t col = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(m.params.embedding.cols()) - 1));
      idx = col * rows + row;
    } else {
      idx = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(blocks[b].size()) - 1));
    }
    const double fd = test::central_diff(loss, blocks[b][idx], 1e-5);
    const double an = gblocks[b][idx];
    INFO(names[b] << "[" << idx << "] analytic " << an << " numeric " << fd);
    CHECK(test::rel_err(an, fd, 1e-7) < 1e-4);
    ++checked;
  }
  CHECK(checked == 30);
}

TEST_CASE("training: lr 0 is a no-op and a toy corpus is learned") {
  const Dataset d = toy_corpus();
  const SentimentModel m0 = init_sentiment_model(build_vocab(d, 1), SentimentDims{8, 8, 16, 32}, 1);

  SentimentTrainConfig frozen;
  frozen.lr = 0;
  frozen.epochs = 3;
  const auto f = train_sentiment(m0, d, frozen);
  const auto a = m0.params.blocks();
  const auto b = f.model.params.blocks();
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::equal(a[k].begin(), a[k].end(), b[k].begin()));

  SentimentTrainConfig c;
  c.epochs = 30;
  const auto r = train_sentiment(m0, d, c);
  REQUIRE(r.loss.size() == 31);
  CHECK(r.loss.back() < 0.1 * r.loss.front());
  CHECK(r.loss.front() == doctest::Approx(sentiment_loss(m0, d)));

  const auto again = train_sentiment(m0, d, c);
  CHECK(again.loss == r.loss);
  CHECK(again.model.params.head_w == r.model.params.head_w);
}

TEST_CASE("trained on synthetic data, lexicon probes land on the right side") {
  const Dataset d = generate_synthetic(test::small_synth(5, 50, 0));
  SentimentModel m = init_sentiment_model(build_vocab(d, 1), SentimentDims{12, 12, 16, 32}, 2);
  SentimentTrainConfig c;
  c.epochs = 8;
  m = train_sentiment(m, d, c).model;
  CHECK(score_review(m, std::string("the item is excellent and amazing.")) >= 4.0);
  CHECK(score_review(m, std::string("the item is terrible and awful.")) <= 2.0);
  const auto scores = score_all(m, d, 2);
  REQUIRE(scores.size() == d.interactions.size());
  for (std::size_t i = 0; i < scores.size(); i += 11)
    CHECK(scores[i] == score_review(m, d.interactions[i].tokens));
}

TEST_CASE("checkpoint round trip") {
  const Dataset d = toy_corpus();
  SentimentModel m = init_sentiment_model(build_vocab(d, 1), SentimentDims{4, 3, 5, 7}, 6);
  jitter(m.params, 2, 0.3);
  const auto dir = test::scratch("hdan");
  save_sentiment_model(m, dir / "h.bin");
  const SentimentModel back = load_sentiment_model(dir / "h.bin");
  CHECK(back.vocab.tokens == m.vocab.tokens);
  CHECK(back.dims.max_sentences == 5);
  CHECK(back.dims.max_words == 7);
  const auto a = m.params.blocks();
  const auto b = back.params.blocks();
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::equal(a[k].begin(), a[k].end(), b[k].begin(), b[k].end()));
  CHECK(score_review(back, std::string("perfect and broken.")) == score_review(m, std::string("perfect and broken.")));
}
