// SPDX-License-Identifier: Apache-2.0
#include "mmd/detect.hpp"

#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "mmd/error.hpp"
#include "mmd/parallel.hpp"
#include "mmd/rng.hpp"

namespace mmd {

using Eigen::VectorXd;

namespace {

struct Assignment {
  std::vector<int> cluster;
  std::vector<double> dist;  // distance to the assigned centroid
};

Assignment assign(const std::vector<VectorXd>& transformed, const MetricModel& model,
                  const VectorXd (&centroids)[2], unsigned threads) {
  const VectorXd x0 = transform(model, centroids[0]);
  const VectorXd x1 = transform(model, centroids[1]);
  Assignment a;
  a.cluster.resize(transformed.size());
  a.dist.resize(transformed.size());
  parallel_for(transformed.size(), threads, [&](std::size_t i) {
    const double d0 = transformed_distance(transformed[i], x0, model);
    const double d1 = transformed_distance(transformed[i], x1, model);
    a.cluster[i] = d1 < d0 ? 1 : 0;
    a.dist[i] = std::min(d0, d1);
  });
  return a;
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

double cluster_cost(const std::vector<VectorXd>& transformed, const std::vector<int>& cluster,
                    int which, const VectorXd& centroid, const MetricModel& model) {
  const VectorXd xc = transform(model, centroid);
  double s = 0.0;
  for (std::size_t i = 0; i < transformed.size(); ++i)
    if (cluster[i] == which) s += transformed_distance(transformed[i], xc, model);
  return s;
}

}  // namespace

KmeansResult kmeans_metric(const ProfileTable& profiles, const MetricModel& model,
                           const VectorXd& centroid_pmu, const VectorXd& centroid_normal,
                           std::size_t max_iter, double tol, unsigned threads) {
  const auto d = static_cast<Eigen::Index>(model.dim());
  if (centroid_pmu.size() != d || centroid_normal.size() != d)
    throw ConfigError("initial centroids must have length p+k");
  if (centroid_pmu == centroid_normal) throw ConfigError("initial centroids must be distinct");
  for (const auto& z : profiles)
    if (z.size() != d) throw ShapeError("profile size does not match the metric");

  std::vector<VectorXd> transformed(profiles.size());
  parallel_for(profiles.size(), threads,
               [&](std::size_t i) { transformed[i] = transform(model, profiles[i]); });

  KmeansResult res;
  res.centroids[0] = centroid_pmu;
  res.centroids[1] = centroid_normal;
  if (profiles.empty()) {
    res.converged = true;
    res.objective.push_back(0.0);
    return res;
  }

  auto reseed_empty = [&](Assignment& a) {
    for (int c = 0; c < 2; ++c) {
      if (std::find(a.cluster.begin(), a.cluster.end(), c) != a.cluster.end()) continue;
      const VectorXd other = transform(model, res.centroids[1 - c]);
      std::size_t best = 0;
      double best_d = -1.0;
      for (std::size_t i = 0; i < transformed.size(); ++i) {
        const double di = transformed_distance(transformed[i], other, model);
        if (di > best_d) {
          best_d = di;
          best = i;
        }
      }
      res.centroids[c] = profiles[best];
      ++res.reseeds;
      a = assign(transformed, model, res.centroids, threads);
      return;  // at most one re-seed per pass
    }
  };

  Assignment cur = assign(transformed, model, res.centroids, threads);
  reseed_empty(cur);
  res.objective.push_back(sum(cur.dist));

  for (std::size_t it = 0; it < max_iter; ++it) {
    ++res.iterations;
    for (int c = 0; c < 2; ++c) {
      VectorXd mean = VectorXd::Zero(d);
      std::size_t count = 0;
      for (std::size_t i = 0; i < profiles.size(); ++i)
        if (cur.cluster[i] == c) {
          mean += profiles[i];
          ++count;
        }
      if (count == 0) continue;
      mean /= static_cast<double>(count);
      const double before = cluster_cost(transformed, cur.cluster, c, res.centroids[c], model);
      const double after = cluster_cost(transformed, cur.cluster, c, mean, model);
      if (after <= before) res.centroids[c] = mean;
    }
    Assignment next = assign(transformed, model, res.centroids, threads);
    reseed_empty(next);
    const double obj = sum(next.dist);
    const bool same = next.cluster == cur.cluster;
    const double prev = res.objective.back();
    res.objective.push_back(obj);
    cur = std::move(next);
    if (same || prev - obj <= tol * std::max(1.0, prev)) {
      // an unchanged objective with changed labels is a tie shuffle; stop
      res.converged = true;
      break;
    }
  }
  res.assignment = std::move(cur.cluster);
  return res;
}

std::pair<VectorXd, VectorXd> heuristic_centroids(const ProfileTable& profiles,
                                                  const std::set<std::size_t>& candidates) {
  if (profiles.empty()) throw ConfigError("no profiles");
  const auto d = profiles.front().size();
  VectorXd a = VectorXd::Zero(d), b = VectorXd::Zero(d);
  std::size_t na = 0, nb = 0;
  for (std::size_t u = 0; u < profiles.size(); ++u) {
    if (candidates.count(u)) {
      a += profiles[u];
      ++na;
    } else {
      b += profiles[u];
      ++nb;
    }
  }
  if (na == 0 || nb == 0) throw ConfigError("heuristic seeding needs candidates and non-candidates");
  return {a / static_cast<double>(na), b / static_cast<double>(nb)};
}

std::set<std::size_t> label_pmu(const std::vector<int>& assignment,
                                const std::set<std::size_t>& candidates) {
  std::set<std::size_t> out;
  if (candidates.empty()) return out;
  std::size_t hits[2] = {0, 0}, sizes[2] = {0, 0};
  for (std::size_t u = 0; u < assignment.size(); ++u) {
    const int c = assignment[u];
    ++sizes[c];
    if (candidates.count(u)) ++hits[c];
  }
  int pick;
  if (hits[0] != hits[1])
    pick = hits[0] > hits[1] ? 0 : 1;
  else
    pick = sizes[1] < sizes[0] ? 1 : 0;
  for (std::size_t u = 0; u < assignment.size(); ++u)
    if (assignment[u] == pick) out.insert(u);
  return out;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (lfm.dim == 0) fail("lfm dim must be positive");
  if (!(lfm.lr >= 0.0)) fail("lfm lr must be >= 0");
  if (!(lfm.l2 >= 0.0)) fail("lfm l2 must be >= 0");
  if (sentiment_dims.word_dim <= 0 || sentiment_dims.hidden_dim <= 0) fail("sentiment dims must be positive");
  if (sentiment_dims.max_sentences == 0 || sentiment_dims.max_words == 0) fail("sentiment truncation caps must be positive");
  if (!(sentiment.lr >= 0.0)) fail("sentiment lr must be >= 0");
  if (!(sentiment.adagrad_init > 0.0)) fail("sentiment adagrad init must be > 0");
  if (vocab_min_count == 0) fail("vocab min count must be >= 1");
  if (k == 0) fail("gap dimension k must be positive");
  if (!(alpha_g >= 0.0)) fail("alpha_g must be >= 0");
  if (!(theta_mu > 0.0 && theta_mu <= 1.0)) fail("theta_mu must be in (0, 1]");
  if (!(c > 0.0)) fail("c must be > 0");
  if (!(lambda > 0.0 && lambda < 1.0)) fail("lambda must be in (0, 1)");
  if (!(mlc.lr >= 0.0)) fail("mlc lr must be >= 0");
  if (!(mlc.l2 >= 0.0)) fail("mlc l2 must be >= 0");
  if (mlc.per_anchor < 5 || mlc.per_anchor > 10) fail("per_anchor must be in [5, 10]");
  if (!(mlc.adagrad_init > 0.0)) fail("mlc adagrad init must be > 0");
  if (kmeans_max_iter == 0) fail("kmeans max_iter must be positive");
  if (threads == 0) fail("threads must be >= 1");
}

namespace {

nlohmann::ordered_json lfm_json(const LfmConfig& c) {
  return {{"dim", c.dim}, {"lr", c.lr}, {"epochs", c.epochs}, {"l2", c.l2}};
}

nlohmann::ordered_json sentiment_json(const PipelineConfig& c) {
  return {{"word_dim", c.sentiment_dims.word_dim},
          {"hidden_dim", c.sentiment_dims.hidden_dim},
          {"max_sentences", c.sentiment_dims.max_sentences},
          {"max_words", c.sentiment_dims.max_words},
          {"vocab_min_count", c.vocab_min_count},
          {"lr", c.sentiment.lr},
          {"epochs", c.sentiment.epochs},
          {"adagrad_init", c.sentiment.adagrad_init}};
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t dataset_fingerprint(const Dataset& data) {
  std::uint64_t h = fnv1a(std::to_string(data.m) + "/" + std::to_string(data.n));
  for (const auto& x : data.interactions) {
    h = fnv1a(std::to_string(x.user) + "," + std::to_string(x.item) + "," + std::to_string(x.rating) + ",", h);
    h = fnv1a(x.review, h);
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::filesystem::path stage_path(const std::filesystem::path& dir, const std::string& stage,
                                 std::uint64_t data_fp, const std::string& cfg_text,
                                 std::uint64_t seed, const char* ext) {
  const std::uint64_t key = fnv1a(cfg_text, data_fp ^ splitmix64(seed));
  return dir / (stage + "-" + hex(key) + ext);
}

}  // namespace

std::string to_json_text(const PipelineConfig& c) {
  nlohmann::ordered_json v;
  v["seed"] = c.seed;
  v["lfm"] = lfm_json(c.lfm);
  v["sentiment"] = sentiment_json(c);
  v["k"] = c.k;
  v["alpha_g"] = c.alpha_g;
  v["theta_mu"] = c.theta_mu;
  v["form"] = std::string(1, form_tag(c.form));
  v["attention"] = c.attention;
  v["c"] = c.c;
  v["lambda"] = c.lambda;
  v["mlc"] = {{"lr", c.mlc.lr},
              {"epochs", c.mlc.epochs},
              {"l2", c.mlc.l2},
              {"per_anchor", c.mlc.per_anchor},
              {"project_every", c.mlc.project_every},
              {"adagrad_init", c.mlc.adagrad_init}};
  v["kmeans_max_iter"] = c.kmeans_max_iter;
  return v.dump();
}

StageScores compute_scores(const Dataset& data, const PipelineConfig& config,
                           const std::optional<std::filesystem::path>& run_dir) {
  config.validate();
  if (data.interactions.empty()) throw Error("dataset has no interactions");
  data.validate();
  if (run_dir) std::filesystem::create_directories(*run_dir);
  const std::uint64_t fp = dataset_fingerprint(data);

  StageScores out;
  LfmConfig lc = config.lfm;
  lc.seed = derive_seed(config.seed, "lfm");
  std::optional<std::filesystem::path> lfm_file;
  if (run_dir) lfm_file = stage_path(*run_dir, "lfm", fp, lfm_json(lc).dump(), lc.seed, ".bin");
  if (lfm_file && std::filesystem::exists(*lfm_file)) {
    out.factors = load_factor_model(*lfm_file);
  } else {
    auto res = train_lfm(data, lc);
    out.factors = std::move(res.model);
    out.lfm_loss = std::move(res.train_loss);
    if (lfm_file) save_factor_model(out.factors, *lfm_file);
  }
  if (out.factors.users() != data.m || out.factors.items() != data.n)
    throw ShapeError("factor checkpoint does not match the dataset");

  SentimentTrainConfig sc = config.sentiment;
  sc.seed = derive_seed(config.seed, "hdan");
  const std::uint64_t init_seed = derive_seed(config.seed, "hdan-init");
  std::optional<std::filesystem::path> hdan_file;
  if (run_dir)
    hdan_file = stage_path(*run_dir, "hdan", fp, sentiment_json(config).dump(), sc.seed, ".bin");
  SentimentModel sm;
  if (hdan_file && std::filesystem::exists(*hdan_file)) {
    sm = load_sentiment_model(*hdan_file);
  } else {
    Vocab vocab = build_vocab(data, config.vocab_min_count);
    auto res = train_sentiment(init_sentiment_model(std::move(vocab), config.sentiment_dims, init_seed),
                               data, sc);
    sm = std::move(res.model);
    out.sentiment_loss = std::move(res.loss);
    if (hdan_file) save_sentiment_model(sm, *hdan_file);
  }

  out.rating_scores.resize(data.interactions.size());
  for (std::size_t i = 0; i < data.interactions.size(); ++i) {
    const auto& x = data.interactions[i];
    out.rating_scores[i] = rating_score(out.factors, x.user, x.item);
  }
  out.review_scores = score_all(sm, data, config.threads);
  return out;
}

ProfileTable build_profiles(const Dataset& data, const StageScores& scores, std::size_t k) {
  const auto gaps = interaction_gaps(scores.rating_scores, scores.review_scores);
  const auto per_user = gaps_by_user(data, gaps);
  const std::size_t p = scores.factors.dim();
  ProfileTable out(data.m);
  for (std::size_t u = 0; u < data.m; ++u) {
    const GapVector g = gap_vector(per_user[u], k, u);
    out[u] = profile_vector(scores.factors.P.row(static_cast<Eigen::Index>(u)).transpose(), g.values, p, k, u).z;
  }
  return out;
}

DetectionReport detect_from_scores(const Dataset& data, const StageScores& scores,
                                   const PipelineConfig& config,
                                   const std::optional<std::filesystem::path>& run_dir) {
  config.validate();
  if (data.m == 0) throw Error("dataset has no users");
  if (scores.rating_scores.size() != data.interactions.size() ||
      scores.review_scores.size() != data.interactions.size())
    throw ShapeError("stage scores do not match the dataset");

  DetectionReport rep;
  rep.users = data.m;
  rep.config_json = to_json_text(config);

  const auto gaps = interaction_gaps(scores.rating_scores, scores.review_scores);
  const auto per_user = gaps_by_user(data, gaps);
  const CandidateSet cand = candidate_set_from_gaps(per_user, config.alpha_g, config.theta_mu);
  rep.candidates = cand.members;
  const ProfileTable profiles = build_profiles(data, scores, config.k);

  if (run_dir) {
    std::filesystem::create_directories(*run_dir);
    std::vector<GapVector> gv;
    gv.reserve(data.m);
    for (std::size_t u = 0; u < data.m; ++u) gv.push_back(gap_vector(per_user[u], config.k, u));
    save_gap_vectors_csv(data, gv, cand, *run_dir / "gaps.csv");
  }

  if (rep.candidates.size() < 2 || rep.candidates.size() >= data.m) {
    rep.mup_only = true;
    rep.detected = rep.candidates;
  } else {
    MetricModel model = init_metric(config.form, scores.factors.dim(), config.k,
                                    derive_seed(config.seed, "metric-init"), config.attention);
    model.c = config.c;
    model.lambda = config.lambda;
    MlcConfig mc = config.mlc;
    mc.seed = derive_seed(config.seed, "mlc");
    auto trained = train_mlc(profiles, rep.candidates, std::move(model), mc);
    rep.mlc_train_loss = std::move(trained.train_loss);
    rep.mlc_holdout_loss = std::move(trained.holdout_loss);
    rep.mlc_updates = trained.updates;
    const auto [c_pmu, c_normal] = heuristic_centroids(profiles, rep.candidates);
    const KmeansResult km = kmeans_metric(profiles, trained.model, c_pmu, c_normal,
                                          config.kmeans_max_iter, 1e-12, config.threads);
    rep.kmeans_objective = km.objective;
    rep.kmeans_iterations = km.iterations;
    rep.kmeans_reseeds = km.reseeds;
    rep.detected = label_pmu(km.assignment, rep.candidates);
    if (run_dir) {
      save_metric_model(trained.model, *run_dir / "metric.json");
      save_eigenvalues_csv(trained.model, *run_dir / "eigenvalues.csv");
    }
  }
  rep.labels.assign(data.m, UserLabel::Normal);
  for (std::size_t u : rep.detected) rep.labels[u] = UserLabel::Pmu;
  return rep;
}

DetectionReport run_mmd(const Dataset& data, const PipelineConfig& config,
                        const std::optional<std::filesystem::path>& run_dir) {
  if (data.m == 0 || data.interactions.empty()) throw Error("dataset is empty");
  const StageScores scores = compute_scores(data, config, run_dir);
  return detect_from_scores(data, scores, config, run_dir);
}

void save_report_json(const DetectionReport& report, const Dataset& data,
                      const std::filesystem::path& path) {
  nlohmann::ordered_json v;
  v["users"] = report.users;
  v["mode"] = report.mup_only ? "MUP-only" : "MMD";
  auto names = [&](const std::set<std::size_t>& s) {
    nlohmann::json a = nlohmann::json::array();
    for (std::size_t u : s) a.push_back(u < data.user_names.size() ? data.user_names[u] : std::to_string(u));
    return a;
  };
  v["candidates"] = names(report.candidates);
  v["detected"] = names(report.detected);
  v["mlc"] = {{"updates", report.mlc_updates},
              {"train_loss", report.mlc_train_loss},
              {"holdout_loss", report.mlc_holdout_loss}};
  v["kmeans"] = {{"iterations", report.kmeans_iterations},
                 {"reseeds", report.kmeans_reseeds},
                 {"objective", report.kmeans_objective}};
  v["config"] = nlohmann::ordered_json::parse(report.config_json);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << v.dump(2) << '\n';
}

void save_report_labels_csv(const DetectionReport& report, const Dataset& data,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "user,name,candidate,label\n";
  for (std::size_t u = 0; u < report.labels.size(); ++u) {
    out << u << ',' << (u < data.user_names.size() ? data.user_names[u] : std::to_string(u)) << ','
        << (report.candidates.count(u) ? 1 : 0) << ',' << to_string(report.labels[u]) << '\n';
  }
}

}  // namespace mmd
