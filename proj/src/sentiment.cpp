// SPDX-License-Identifier: Apache-2.0
#include "mmd/sentiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

#include "mmd/error.hpp"
#include "mmd/parallel.hpp"
#include "mmd/rng.hpp"

namespace mmd {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Vocabulary

std::size_t Vocab::lookup(const std::string& token) const {
  const auto it = index.find(token);
  return it == index.end() ? kUnknown : it->second;
}

void Vocab::add(const std::string& token) {
  if (index.count(token)) return;
  index.emplace(token, tokens.size());
  tokens.push_back(token);
}

Vocab build_vocab(const Dataset& train, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& x : train.interactions)
    for (const auto& sentence : x.tokens)
      for (const auto& w : sentence) ++counts[w];
  Vocab v;
  for (const auto& [token, c] : counts)
    if (c >= min_count) v.add(token);
  return v;
}

// ---------------------------------------------------------------------------
// Parameter containers

GruParams GruParams::zeros(Index input, Index hidden) {
  GruParams p;
  for (MatrixXd* w : {&p.W_update, &p.W_reset, &p.W_cand}) *w = MatrixXd::Zero(hidden, 3 * input);
  for (MatrixXd* u : {&p.U_update, &p.U_reset, &p.U_cand}) *u = MatrixXd::Zero(hidden, hidden);
  for (VectorXd* b : {&p.b_update, &p.b_reset, &p.b_cand}) *b = VectorXd::Zero(hidden);
  return p;
}

AttentionParams AttentionParams::zeros(Index dim) {
  return {MatrixXd::Zero(dim, dim), VectorXd::Zero(dim), VectorXd::Zero(dim)};
}

HdanParams HdanParams::zeros(std::size_t vocab_rows, Index word_dim, Index hidden_dim) {
  HdanParams p;
  p.embedding = MatrixXd::Zero(static_cast<Index>(vocab_rows), word_dim);
  p.word_gru = GruParams::zeros(word_dim, hidden_dim);
  p.word_attention = AttentionParams::zeros(hidden_dim);
  p.sentence_gru = GruParams::zeros(hidden_dim, hidden_dim);
  p.sentence_attention = AttentionParams::zeros(hidden_dim);
  p.head_w = VectorXd::Zero(hidden_dim);
  p.head_b = VectorXd::Zero(1);
  return p;
}

HdanParams HdanParams::zeros_like(const HdanParams& other) {
  return zeros(static_cast<std::size_t>(other.embedding.rows()), other.embedding.cols(),
               other.head_w.size());
}

namespace {

template <class Params, class Span>
std::vector<Span> collect_blocks(Params& p) {
  std::vector<Span> out;
  const auto add = [&](auto& t) { out.emplace_back(t.data(), static_cast<std::size_t>(t.size())); };
  add(p.embedding);
  const auto gru = [&](auto& g) {
    add(g.W_update), add(g.U_update), add(g.b_update);
    add(g.W_reset), add(g.U_reset), add(g.b_reset);
    add(g.W_cand), add(g.U_cand), add(g.b_cand);
  };
  const auto att = [&](auto& a) { add(a.W), add(a.b), add(a.context); };
  gru(p.word_gru);
  att(p.word_attention);
  gru(p.sentence_gru);
  att(p.sentence_attention);
  add(p.head_w);
  add(p.head_b);
  return out;
}

}  // namespace

std::vector<std::span<double>> HdanParams::blocks() {
  return collect_blocks<HdanParams, std::span<double>>(*this);
}

std::vector<std::span<const double>> HdanParams::blocks() const {
  return collect_blocks<const HdanParams, std::span<const double>>(*this);
}

std::vector<std::string> HdanParams::block_names() const {
  std::vector<std::string> out{"embedding"};
  for (const char* level : {"word", "sentence"}) {
    for (const char* g : {"update", "reset", "cand"})
      for (const char* t : {"W", "U", "b"}) out.push_back(std::string(level) + "_gru." + t + "_" + g);
    for (const char* t : {"W", "b", "context"}) out.push_back(std::string(level) + "_attention." + t);
  }
  out.push_back("head_w");
  out.push_back("head_b");
  return out;
}

namespace {

void glorot(MatrixXd& m, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r) m(r, c) = uniform(rng, -a, a);
}

void fill_uniform(Eigen::Ref<MatrixXd> m, Rng& rng, double a) {
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r) m(r, c) = uniform(rng, -a, a);
}

void init_gru(GruParams& g, Rng& rng) {
  for (MatrixXd* w : {&g.W_update, &g.U_update, &g.W_reset, &g.U_reset, &g.W_cand, &g.U_cand}) glorot(*w, rng);
}

}  // namespace

SentimentModel init_sentiment_model(Vocab vocab, SentimentDims dims, std::uint64_t seed) {
  if (dims.word_dim <= 0 || dims.hidden_dim <= 0 || dims.max_sentences == 0 || dims.max_words == 0)
    throw ConfigError("sentiment dimensions must be positive");
  Rng rng(seed);
  SentimentModel model;
  model.params = HdanParams::zeros(vocab.tokens.size(), dims.word_dim, dims.hidden_dim);
  model.vocab = std::move(vocab);
  model.dims = dims;
  HdanParams& p = model.params;
  fill_uniform(p.embedding, rng, 0.1);
  init_gru(p.word_gru, rng);
  glorot(p.word_attention.W, rng);
  fill_uniform(p.word_attention.context, rng, 0.1);
  init_gru(p.sentence_gru, rng);
  glorot(p.sentence_attention.W, rng);
  fill_uniform(p.sentence_attention.context, rng, 0.1);
  MatrixXd head(1, dims.hidden_dim);
  glorot(head, rng);
  p.head_w = head.row(0).transpose();
  return model;
}

// ---------------------------------------------------------------------------
// Forward / backward building blocks

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

VectorXd sigmoid(const VectorXd& a) { return a.unaryExpr([](double v) { return sigmoid(v); }); }

struct StepCache {
  VectorXd xhat, h_prev, z, r, c, uh;
};

VectorXd gru_forward_step(const GruParams& p, const VectorXd& xhat, const VectorXd& h_prev,
                          StepCache* cache) {
  VectorXd uh = p.U_cand * h_prev;
  VectorXd z = sigmoid(p.W_update * xhat + p.U_update * h_prev + p.b_update);
  VectorXd r = sigmoid(p.W_reset * xhat + p.U_reset * h_prev + p.b_reset);
  VectorXd c = (p.W_cand * xhat + r.cwiseProduct(uh) + p.b_cand).array().tanh().matrix();
  VectorXd h = (VectorXd::Ones(z.size()) - z).cwiseProduct(h_prev) + z.cwiseProduct(c);
  if (cache) {
    cache->xhat = xhat;
    cache->h_prev = h_prev;
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->c = std::move(c);
    cache->uh = std::move(uh);
  }
  return h;
}

VectorXd window(const MatrixXd& seq, Index t) {
  const Index d = seq.cols();
  const Index T = seq.rows();
  VectorXd x = VectorXd::Zero(3 * d);
  if (t > 0) x.segment(0, d) = seq.row(t - 1).transpose();
  x.segment(d, d) = seq.row(t).transpose();
  if (t + 1 < T) x.segment(2 * d, d) = seq.row(t + 1).transpose();
  return x;
}

struct GruRun {
  MatrixXd hidden;  // T x d_h
  std::vector<StepCache> steps;
};

GruRun run_gru(const GruParams& p, const MatrixXd& seq, bool keep) {
  GruRun run;
  const Index T = seq.rows();
  run.hidden.resize(T, p.hidden_dim());
  if (keep) run.steps.resize(static_cast<std::size_t>(T));
  VectorXd h = VectorXd::Zero(p.hidden_dim());
  for (Index t = 0; t < T; ++t) {
    h = gru_forward_step(p, window(seq, t), h, keep ? &run.steps[static_cast<std::size_t>(t)] : nullptr);
    run.hidden.row(t) = h.transpose();
  }
  return run;
}

// Returns dL/dseq given dL/dhidden (both row-per-step).
MatrixXd gru_backward(const GruParams& p, const GruRun& run, const MatrixXd& d_hidden,
                      GruParams& g) {
  const Index T = d_hidden.rows();
  const Index d = p.input_dim();
  MatrixXd d_seq = MatrixXd::Zero(T, d);
  VectorXd dh_next = VectorXd::Zero(p.hidden_dim());
  for (Index t = T - 1; t >= 0; --t) {
    const StepCache& s = run.steps[static_cast<std::size_t>(t)];
    const VectorXd dh = d_hidden.row(t).transpose() + dh_next;
    const VectorXd dz = dh.cwiseProduct(s.c - s.h_prev);
    const VectorXd dc = dh.cwiseProduct(s.z);
    VectorXd dh_prev = dh.cwiseProduct(VectorXd::Ones(s.z.size()) - s.z);

    const VectorXd da_c = dc.array() * (1.0 - s.c.array().square());
    const VectorXd dr = da_c.cwiseProduct(s.uh);
    const VectorXd d_uh = da_c.cwiseProduct(s.r);
    const VectorXd da_z = dz.array() * s.z.array() * (1.0 - s.z.array());
    const VectorXd da_r = dr.array() * s.r.array() * (1.0 - s.r.array());

    g.W_update.noalias() += da_z * s.xhat.transpose();
    g.U_update.noalias() += da_z * s.h_prev.transpose();
    g.b_update += da_z;
    g.W_reset.noalias() += da_r * s.xhat.transpose();
    g.U_reset.noalias() += da_r * s.h_prev.transpose();
    g.b_reset += da_r;
    g.W_cand.noalias() += da_c * s.xhat.transpose();
    g.U_cand.noalias() += d_uh * s.h_prev.transpose();
    g.b_cand += da_c;

    dh_prev.noalias() += p.U_update.transpose() * da_z;
    dh_prev.noalias() += p.U_reset.transpose() * da_r;
    dh_prev.noalias() += p.U_cand.transpose() * d_uh;

    VectorXd dx = p.W_update.transpose() * da_z;
    dx.noalias() += p.W_reset.transpose() * da_r;
    dx.noalias() += p.W_cand.transpose() * da_c;
    if (t > 0) d_seq.row(t - 1) += dx.segment(0, d).transpose();
    d_seq.row(t) += dx.segment(d, d).transpose();
    if (t + 1 < T) d_seq.row(t + 1) += dx.segment(2 * d, d).transpose();
    dh_next = std::move(dh_prev);
  }
  return d_seq;
}

struct AttentionCache {
  MatrixXd u;  // T x d, tanh(W v_t + b) per row
  VectorXd alpha;
};

Pooled attend(const MatrixXd& seq, const AttentionParams& a, AttentionCache* cache) {
  MatrixXd pre = seq * a.W.transpose();
  pre.rowwise() += a.b.transpose();
  MatrixXd u = pre.array().tanh().matrix();
  VectorXd logits = u * a.context;
  const double mx = logits.maxCoeff();
  VectorXd alpha = (logits.array() - mx).exp().matrix();
  alpha /= alpha.sum();
  Pooled out{seq.transpose() * alpha, alpha};
  if (cache) {
    cache->u = std::move(u);
    cache->alpha = alpha;
  }
  return out;
}

MatrixXd attention_backward(const MatrixXd& seq, const AttentionParams& a,
                            const AttentionCache& cache, const VectorXd& d_pooled,
                            AttentionParams& g) {
  const VectorXd& alpha = cache.alpha;
  MatrixXd d_seq = alpha * d_pooled.transpose();
  const VectorXd d_alpha = seq * d_pooled;
  const double mean = alpha.dot(d_alpha);
  const VectorXd d_logit = alpha.array() * (d_alpha.array() - mean);
  g.context.noalias() += cache.u.transpose() * d_logit;
  // d_pre[t] = d_logit[t] * context .* (1 - u_t^2)
  const MatrixXd d_pre =
      ((d_logit * a.context.transpose()).array() * (1.0 - cache.u.array().square())).matrix();
  g.W.noalias() += d_pre.transpose() * seq;
  g.b += d_pre.colwise().sum().transpose();
  d_seq.noalias() += d_pre * a.W;
  return d_seq;
}

void check_gru(const GruParams& p) {
  const Index h = p.U_update.rows();
  const Index x = p.W_update.cols();
  bool ok = x % 3 == 0;
  for (const MatrixXd* w : {&p.W_update, &p.W_reset, &p.W_cand}) ok = ok && w->rows() == h && w->cols() == x;
  for (const MatrixXd* u : {&p.U_update, &p.U_reset, &p.U_cand}) ok = ok && u->rows() == h && u->cols() == h;
  for (const VectorXd* b : {&p.b_update, &p.b_reset, &p.b_cand}) ok = ok && b->size() == h;
  if (!ok) throw ShapeError("inconsistent recurrence parameter shapes");
}

}  // namespace

VectorXd gru_step(const GruParams& params, const VectorXd& prev, const VectorXd& current,
                  const VectorXd& next, const VectorXd& h_prev) {
  check_gru(params);
  const Index d = params.input_dim();
  if (prev.size() != d || current.size() != d || next.size() != d)
    throw ShapeError("window vectors must match the recurrence input size");
  if (h_prev.size() != params.hidden_dim()) throw ShapeError("hidden state size mismatch");
  VectorXd xhat(3 * d);
  xhat << prev, current, next;
  return gru_forward_step(params, xhat, h_prev, nullptr);
}

Pooled attention_pool(const MatrixXd& sequence, const AttentionParams& params) {
  if (sequence.rows() == 0) throw Error("attention over an empty sequence");
  if (params.W.rows() != sequence.cols() || params.W.cols() != sequence.cols() ||
      params.b.size() != sequence.cols() || params.context.size() != sequence.cols())
    throw ShapeError("attention parameter shape mismatch");
  return attend(sequence, params, nullptr);
}

EncodedReview encode_review(const SentimentModel& model, const TokenizedReview& review) {
  EncodedReview out;
  for (const auto& sentence : review) {
    if (out.size() == model.dims.max_sentences) break;
    if (sentence.empty()) continue;
    std::vector<std::size_t> ids;
    for (const auto& w : sentence) {
      if (ids.size() == model.dims.max_words) break;
      ids.push_back(model.vocab.lookup(w));
    }
    out.push_back(std::move(ids));
  }
  return out;
}

namespace {

struct ReviewTrace {
  std::vector<MatrixXd> word_inputs;
  std::vector<GruRun> word_runs;
  std::vector<AttentionCache> word_att;
  MatrixXd sentences;
  GruRun sentence_run;
  AttentionCache sentence_att;
  VectorXd doc;
  double sig = 0.0;
  double score = 0.0;
};

double forward(const SentimentModel& model, const EncodedReview& review, ReviewTrace* trace) {
  if (review.empty()) throw Error("cannot score an empty review");
  const HdanParams& p = model.params;
  const Index dh = model.dims.hidden_dim;
  const bool keep = trace != nullptr;
  MatrixXd sentences(static_cast<Index>(review.size()), dh);
  for (std::size_t j = 0; j < review.size(); ++j) {
    const auto& ids = review[j];
    if (ids.empty()) throw Error("cannot score an empty sentence");
    MatrixXd seq(static_cast<Index>(ids.size()), p.embedding.cols());
    for (std::size_t t = 0; t < ids.size(); ++t) {
      const Index row = ids[t] < static_cast<std::size_t>(p.embedding.rows()) ? static_cast<Index>(ids[t]) : 0;
      seq.row(static_cast<Index>(t)) = p.embedding.row(row);
    }
    GruRun run = run_gru(p.word_gru, seq, keep);
    AttentionCache cache;
    const Pooled pooled = attend(run.hidden, p.word_attention, keep ? &cache : nullptr);
    sentences.row(static_cast<Index>(j)) = pooled.vector.transpose();
    if (keep) {
      trace->word_inputs.push_back(std::move(seq));
      trace->word_runs.push_back(std::move(run));
      trace->word_att.push_back(std::move(cache));
    }
  }
  GruRun srun = run_gru(p.sentence_gru, sentences, keep);
  AttentionCache scache;
  const Pooled doc = attend(srun.hidden, p.sentence_attention, keep ? &scache : nullptr);
  const double sig = sigmoid(p.head_w.dot(doc.vector) + p.head_b(0));
  const double score = 1.0 + 4.0 * sig;
  if (keep) {
    trace->sentences = std::move(sentences);
    trace->sentence_run = std::move(srun);
    trace->sentence_att = std::move(scache);
    trace->doc = doc.vector;
    trace->sig = sig;
    trace->score = score;
  }
  return score;
}

}  // namespace

double score_encoded(const SentimentModel& model, const EncodedReview& review) {
  return forward(model, review, nullptr);
}

double score_review(const SentimentModel& model, const TokenizedReview& review) {
  return score_encoded(model, encode_review(model, review));
}

double score_review(const SentimentModel& model, const std::string& review) {
  return score_review(model, tokenize(review));
}

std::vector<double> score_all(const SentimentModel& model, const Dataset& data, unsigned threads) {
  std::vector<double> out(data.interactions.size());
  parallel_for(out.size(), threads, [&](std::size_t k) {
    out[k] = score_review(model, data.interactions[k].tokens);
  });
  return out;
}

ReviewLoss review_loss(const SentimentModel& model, const EncodedReview& review, double rating) {
  const double s = score_encoded(model, review);
  return {0.5 * (rating - s) * (rating - s), s};
}

ReviewLoss review_loss_and_grad(const SentimentModel& model, const EncodedReview& review,
                                double rating, HdanParams& grad) {
  ReviewTrace tr;
  const double s = forward(model, review, &tr);
  const HdanParams& p = model.params;

  const double g = (s - rating) * 4.0 * tr.sig * (1.0 - tr.sig);
  grad.head_w += g * tr.doc;
  grad.head_b(0) += g;
  const VectorXd d_doc = g * p.head_w;

  const MatrixXd d_shidden =
      attention_backward(tr.sentence_run.hidden, p.sentence_attention, tr.sentence_att, d_doc,
                         grad.sentence_attention);
  const MatrixXd d_sent = gru_backward(p.sentence_gru, tr.sentence_run, d_shidden, grad.sentence_gru);

  for (std::size_t j = 0; j < review.size(); ++j) {
    const VectorXd d_pooled = d_sent.row(static_cast<Index>(j)).transpose();
    const MatrixXd d_whidden = attention_backward(tr.word_runs[j].hidden, p.word_attention,
                                                  tr.word_att[j], d_pooled, grad.word_attention);
    const MatrixXd d_seq = gru_backward(p.word_gru, tr.word_runs[j], d_whidden, grad.word_gru);
    for (std::size_t t = 0; t < review[j].size(); ++t) {
      const Index row = review[j][t] < static_cast<std::size_t>(p.embedding.rows()) ? static_cast<Index>(review[j][t]) : 0;
      grad.embedding.row(row) += d_seq.row(static_cast<Index>(t));
    }
  }
  return {0.5 * (rating - s) * (rating - s), s};
}

double sentiment_loss(const SentimentModel& model, const Dataset& data) {
  double total = 0.0;
  for (const auto& x : data.interactions) total += review_loss(model, encode_review(model, x.tokens), x.rating).loss;
  return total;
}

// ---------------------------------------------------------------------------
// Training

SentimentTrainResult train_sentiment(SentimentModel model, const Dataset& train,
                                     const SentimentTrainConfig& cfg) {
  if (train.interactions.empty()) throw TrainingError("sentiment training set is empty");
  std::vector<EncodedReview> encoded;
  encoded.reserve(train.interactions.size());
  for (const auto& x : train.interactions) {
    encoded.push_back(encode_review(model, x.tokens));
    if (encoded.back().empty()) throw TrainingError("training review without tokens");
  }

  SentimentTrainResult result;
  HdanParams grad = HdanParams::zeros_like(model.params);
  HdanParams accum = HdanParams::zeros_like(model.params);
  for (auto block : accum.blocks()) std::fill(block.begin(), block.end(), cfg.adagrad_init);

  const auto total_loss = [&] {
    double sum = 0.0;
    for (std::size_t k = 0; k < encoded.size(); ++k)
      sum += review_loss(model, encoded[k], train.interactions[k].rating).loss;
    return sum;
  };
  result.loss.push_back(total_loss());

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), 0);
  const Index dw = model.params.embedding.cols();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k : order) {
      const EncodedReview& review = encoded[k];
      const ReviewLoss l = review_loss_and_grad(model, review, train.interactions[k].rating, grad);
      if (!std::isfinite(l.loss))
        throw TrainingError("sentiment loss became non-finite at epoch " + std::to_string(epoch));

      auto pb = model.params.blocks();
      auto gb = grad.blocks();
      auto ab = accum.blocks();
      // embedding rows: sparse update over the rows this review touched
      std::vector<std::size_t> rows;
      for (const auto& s : review) rows.insert(rows.end(), s.begin(), s.end());
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
      for (std::size_t row : rows) {
        for (Index c = 0; c < dw; ++c) {
          double& gv = grad.embedding(static_cast<Index>(row), c);
          double& av = accum.embedding(static_cast<Index>(row), c);
          av += gv * gv;
          model.params.embedding(static_cast<Index>(row), c) -= cfg.lr * gv / std::sqrt(av);
          gv = 0.0;
        }
      }
      for (std::size_t b = 1; b < pb.size(); ++b) {
        double* pv = pb[b].data();
        double* gv = gb[b].data();
        double* av = ab[b].data();
        for (std::size_t e = 0; e < pb[b].size(); ++e) {
          av[e] += gv[e] * gv[e];
          pv[e] -= cfg.lr * gv[e] / std::sqrt(av[e]);
          gv[e] = 0.0;
        }
      }
    }
    const double loss = total_loss();
    if (!std::isfinite(loss))
      throw TrainingError("sentiment loss became non-finite at epoch " + std::to_string(epoch));
    result.loss.push_back(loss);
  }
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

constexpr char kMagic[8] = {'M', 'M', 'D', 'H', 'D', 'A', 'N', '1'};

void put(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t get(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw Error("truncated sentiment checkpoint");
  return v;
}

}  // namespace

void save_sentiment_model(const SentimentModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  put(out, static_cast<std::uint64_t>(model.dims.word_dim));
  put(out, static_cast<std::uint64_t>(model.dims.hidden_dim));
  put(out, model.dims.max_sentences);
  put(out, model.dims.max_words);
  put(out, model.vocab.size());
  for (std::size_t i = 1; i < model.vocab.tokens.size(); ++i) {
    const std::string& t = model.vocab.tokens[i];
    put(out, t.size());
    out.write(t.data(), static_cast<std::streamsize>(t.size()));
  }
  for (const auto block : model.params.blocks()) {
    put(out, block.size());
    out.write(reinterpret_cast<const char*>(block.data()), static_cast<std::streamsize>(block.size() * sizeof(double)));
  }
}

SentimentModel load_sentiment_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw Error(path.string() + " is not a sentiment checkpoint");
  SentimentDims dims;
  dims.word_dim = static_cast<Index>(get(in));
  dims.hidden_dim = static_cast<Index>(get(in));
  dims.max_sentences = get(in);
  dims.max_words = get(in);
  const auto vocab_size = get(in);
  Vocab vocab;
  for (std::uint64_t i = 0; i < vocab_size; ++i) {
    std::string t(get(in), '\0');
    in.read(t.data(), static_cast<std::streamsize>(t.size()));
    vocab.add(t);
  }
  SentimentModel model;
  model.dims = dims;
  model.params = HdanParams::zeros(vocab.tokens.size(), dims.word_dim, dims.hidden_dim);
  model.vocab = std::move(vocab);
  for (auto block : model.params.blocks()) {
    if (get(in) != block.size()) throw Error("sentiment checkpoint tensor size mismatch");
    in.read(reinterpret_cast<char*>(block.data()), static_cast<std::streamsize>(block.size() * sizeof(double)));
  }
  if (!in) throw Error("truncated sentiment checkpoint");
  return model;
}

}  // namespace mmd
