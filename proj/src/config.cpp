// SPDX-License-Identifier: Apache-2.0
#include "mmd/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "mmd/error.hpp"

namespace mmd {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

double to_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double out = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  std::string t = trim(v);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "1" || t == "true" || t == "on" || t == "yes") return true;
  if (t == "0" || t == "false" || t == "off" || t == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::string num(double v) { return format_value(v); }

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += f(v[i]);
  }
  return s;
}

// Field builders over a member accessor.
template <class Acc>
ConfigField real(std::string key, std::string help, Acc acc) {
  return {key, std::move(help),
          [acc, key](RunConfig& c, const std::string& v) { acc(c) = to_double(key, v); },
          [acc](const RunConfig& c) { return num(acc(const_cast<RunConfig&>(c))); }};
}

template <class Acc>
ConfigField count(std::string key, std::string help, Acc acc) {
  return {key, std::move(help),
          [acc, key](RunConfig& c, const std::string& v) {
            using T = std::remove_reference_t<decltype(acc(c))>;
            acc(c) = static_cast<T>(to_u64(key, v));
          },
          [acc](const RunConfig& c) { return std::to_string(acc(const_cast<RunConfig&>(c))); }};
}

template <class Acc>
ConfigField flag(std::string key, std::string help, Acc acc) {
  return {key, std::move(help),
          [acc, key](RunConfig& c, const std::string& v) { acc(c) = to_bool(key, v); },
          [acc](const RunConfig& c) { return std::string(acc(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

std::vector<ConfigField> make_fields() {
  std::vector<ConfigField> f;
  // general
  f.push_back(count("seed", "master seed of single-run commands", [](RunConfig& c) -> auto& { return c.pipeline.seed; }));
  f.push_back({"seeds", "comma-separated seeds of multi-seed commands",
               [](RunConfig& c, const std::string& v) {
                 c.seeds.clear();
                 for (const auto& s : split_list(v)) c.seeds.push_back(to_u64("seeds", s));
               },
               [](const RunConfig& c) { return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }); }});
  f.push_back({"threads", "worker threads for read-only scoring and ranking",
               [](RunConfig& c, const std::string& v) {
                 c.pipeline.threads = static_cast<unsigned>(to_u64("threads", v));
                 c.enhancement.threads = c.pipeline.threads;
               },
               [](const RunConfig& c) { return std::to_string(c.pipeline.threads); }});
  f.push_back({"data", "input dataset (.jsonl or .csv)",
               [](RunConfig& c, const std::string& v) { c.data = trim(v); },
               [](const RunConfig& c) { return c.data.string(); }});
  f.push_back({"out", "run directory for outputs",
               [](RunConfig& c, const std::string& v) { c.out = trim(v); },
               [](const RunConfig& c) { return c.out.string(); }});

  // generator
  f.push_back(count("synth.n_normal", "normal users", [](RunConfig& c) -> auto& { return c.synth.n_normal; }));
  f.push_back(count("synth.n_pmu", "injected malicious users", [](RunConfig& c) -> auto& { return c.synth.n_pmu; }));
  f.push_back(count("synth.n_items", "items", [](RunConfig& c) -> auto& { return c.synth.n_items; }));
  f.push_back(count("synth.n_genres", "item genres", [](RunConfig& c) -> auto& { return c.synth.n_genres; }));
  f.push_back(count("synth.interactions_min", "min interactions per normal user", [](RunConfig& c) -> auto& { return c.synth.interactions_per_user.lo; }));
  f.push_back(count("synth.interactions_max", "max interactions per normal user", [](RunConfig& c) -> auto& { return c.synth.interactions_per_user.hi; }));
  f.push_back(count("synth.pmu_interactions_min", "min interactions per malicious user", [](RunConfig& c) -> auto& { return c.synth.pmu_interactions_per_user.lo; }));
  f.push_back(count("synth.pmu_interactions_max", "max interactions per malicious user", [](RunConfig& c) -> auto& { return c.synth.pmu_interactions_per_user.hi; }));
  f.push_back(real("synth.theta_fa", "max fake-rating fraction per malicious user", [](RunConfig& c) -> auto& { return c.synth.theta_fa; }));
  f.push_back(real("synth.theta_ne", "max negative-review fraction per malicious user", [](RunConfig& c) -> auto& { return c.synth.theta_ne; }));
  f.push_back(real("synth.theta_mu_target", "min masking-pair fraction per malicious user", [](RunConfig& c) -> auto& { return c.synth.theta_mu_target; }));
  f.push_back(real("synth.pmu_negative_cap", "bound on a malicious user's low-rating or negative-review share", [](RunConfig& c) -> auto& { return c.synth.pmu_negative_cap; }));
  f.push_back(real("synth.normal_mask_cap", "masking-pair fraction bound for normal users", [](RunConfig& c) -> auto& { return c.synth.normal_mask_cap; }));
  f.push_back(real("synth.review_jitter", "chance a mid rating gets a review one level off", [](RunConfig& c) -> auto& { return c.synth.review_jitter; }));
  f.push_back(real("synth.lukewarm_share", "share of normal users writing neutral reviews", [](RunConfig& c) -> auto& { return c.synth.lukewarm_share; }));
  f.push_back(real("synth.careless_prob", "chance a normal user has one flipped rating", [](RunConfig& c) -> auto& { return c.synth.careless_prob; }));
  f.push_back(real("synth.pmu_extreme_prob", "chance a masking rating is 1 or 5", [](RunConfig& c) -> auto& { return c.synth.pmu_extreme_prob; }));
  f.push_back(count("synth.sentences", "sentences per synthetic review", [](RunConfig& c) -> auto& { return c.synth.sentences_per_review; }));
  f.push_back(count("synth.seed", "generator seed for synth", [](RunConfig& c) -> auto& { return c.synth.seed; }));

  // rating model
  f.push_back(count("p", "latent factor dimension", [](RunConfig& c) -> auto& { return c.pipeline.lfm.dim; }));
  f.push_back(real("lfm.lr", "factor model learning rate", [](RunConfig& c) -> auto& { return c.pipeline.lfm.lr; }));
  f.push_back(count("lfm.epochs", "factor model epochs", [](RunConfig& c) -> auto& { return c.pipeline.lfm.epochs; }));
  f.push_back(real("lfm.l2", "factor model L2 weight", [](RunConfig& c) -> auto& { return c.pipeline.lfm.l2; }));

  // sentiment model
  f.push_back(count("hdan.word_dim", "word embedding size", [](RunConfig& c) -> auto& { return c.pipeline.sentiment_dims.word_dim; }));
  f.push_back(count("hdan.hidden_dim", "recurrent hidden size", [](RunConfig& c) -> auto& { return c.pipeline.sentiment_dims.hidden_dim; }));
  f.push_back(count("hdan.max_sentences", "sentences kept per review", [](RunConfig& c) -> auto& { return c.pipeline.sentiment_dims.max_sentences; }));
  f.push_back(count("hdan.max_words", "words kept per sentence", [](RunConfig& c) -> auto& { return c.pipeline.sentiment_dims.max_words; }));
  f.push_back(count("hdan.min_count", "vocabulary frequency floor", [](RunConfig& c) -> auto& { return c.pipeline.vocab_min_count; }));
  f.push_back(real("hdan.lr", "sentiment learning rate", [](RunConfig& c) -> auto& { return c.pipeline.sentiment.lr; }));
  f.push_back(count("hdan.epochs", "sentiment epochs", [](RunConfig& c) -> auto& { return c.pipeline.sentiment.epochs; }));
  f.push_back(real("hdan.adagrad_init", "sentiment Adagrad accumulator start", [](RunConfig& c) -> auto& { return c.pipeline.sentiment.adagrad_init; }));

  // profiling and metric
  f.push_back(count("k", "gap vector length", [](RunConfig& c) -> auto& { return c.pipeline.k; }));
  f.push_back(real("alpha_g", "sentiment gap threshold", [](RunConfig& c) -> auto& { return c.pipeline.alpha_g; }));
  f.push_back(real("theta_mu", "masking fraction threshold", [](RunConfig& c) -> auto& { return c.pipeline.theta_mu; }));
  f.push_back({"form", "metric form E, D, F or R",
               [](RunConfig& c, const std::string& v) { c.pipeline.form = parse_form(trim(v)); },
               [](const RunConfig& c) { return std::string(1, form_tag(c.pipeline.form)); }});
  f.push_back(flag("attention", "attention on profile vectors", [](RunConfig& c) -> auto& { return c.pipeline.attention; }));
  f.push_back(real("c", "metric scale and hinge margin", [](RunConfig& c) -> auto& { return c.pipeline.c; }));
  f.push_back(real("lambda", "triplet mix weight", [](RunConfig& c) -> auto& { return c.pipeline.lambda; }));
  f.push_back(real("mlc.lr", "metric learning rate", [](RunConfig& c) -> auto& { return c.pipeline.mlc.lr; }));
  f.push_back(count("mlc.epochs", "metric learning epochs", [](RunConfig& c) -> auto& { return c.pipeline.mlc.epochs; }));
  f.push_back(real("mlc.l2", "metric L2 weight", [](RunConfig& c) -> auto& { return c.pipeline.mlc.l2; }));
  f.push_back(count("mlc.per_anchor", "triplets per candidate per epoch (5..10)", [](RunConfig& c) -> auto& { return c.pipeline.mlc.per_anchor; }));
  f.push_back(count("mlc.project_every", "updates between PSD projections", [](RunConfig& c) -> auto& { return c.pipeline.mlc.project_every; }));
  f.push_back(real("mlc.adagrad_init", "metric Adagrad accumulator start", [](RunConfig& c) -> auto& { return c.pipeline.mlc.adagrad_init; }));
  f.push_back(count("kmeans.max_iter", "clustering iteration cap", [](RunConfig& c) -> auto& { return c.pipeline.kmeans_max_iter; }));

  // evaluation
  f.push_back(real("sod.theta", "negative feedback threshold of the SOD baseline", [](RunConfig& c) -> auto& { return c.comparison.sod_theta; }));
  f.push_back({"sweep.alpha", "alpha_g grid of the sweep command",
               [](RunConfig& c, const std::string& v) {
                 c.alpha_grid.clear();
                 for (const auto& s : split_list(v)) c.alpha_grid.push_back(to_double("sweep.alpha", s));
               },
               [](const RunConfig& c) { return join(c.alpha_grid, num); }});
  f.push_back({"sweep.theta", "theta_mu grid of the sweep command",
               [](RunConfig& c, const std::string& v) {
                 c.theta_grid.clear();
                 for (const auto& s : split_list(v)) c.theta_grid.push_back(to_double("sweep.theta", s));
               },
               [](const RunConfig& c) { return join(c.theta_grid, num); }});
  f.push_back({"rec.kinds", "recommenders of the enhance command",
               [](RunConfig& c, const std::string& v) {
                 c.enhancement.kinds.clear();
                 for (const auto& s : split_list(v)) c.enhancement.kinds.push_back(parse_recommender_kind(s));
               },
               [](const RunConfig& c) {
                 return join(c.enhancement.kinds, [](RecommenderKind k) { return std::string(to_string(k)); });
               }});
  f.push_back({"rec.n_list", "cut-offs N for HR@N and NDCG@N",
               [](RunConfig& c, const std::string& v) {
                 c.enhancement.n_list.clear();
                 for (const auto& s : split_list(v)) c.enhancement.n_list.push_back(to_u64("rec.n_list", s));
               },
               [](const RunConfig& c) { return join(c.enhancement.n_list, [](std::size_t n) { return std::to_string(n); }); }});
  f.push_back(count("rec.negatives", "sampled negatives per test positive", [](RunConfig& c) -> auto& { return c.enhancement.negatives; }));
  f.push_back(real("split.train", "train share", [](RunConfig& c) -> auto& { return c.enhancement.ratios.train; }));
  f.push_back(real("split.val", "validation share", [](RunConfig& c) -> auto& { return c.enhancement.ratios.val; }));
  f.push_back(real("split.test", "test share", [](RunConfig& c) -> auto& { return c.enhancement.ratios.test; }));
  f.push_back(count("rec.neighbors", "CF neighbourhood size", [](RunConfig& c) -> auto& { return c.enhancement.recommender.neighbors; }));
  f.push_back(count("rec.dim", "recommender factor dimension", [](RunConfig& c) -> auto& { return c.enhancement.recommender.dim; }));
  f.push_back(real("rec.als_l2", "ALS L2 weight", [](RunConfig& c) -> auto& { return c.enhancement.recommender.als_l2; }));
  f.push_back(count("rec.als_iterations", "ALS sweeps", [](RunConfig& c) -> auto& { return c.enhancement.recommender.als_iterations; }));
  f.push_back(real("rec.bpr_lr", "BPR learning rate", [](RunConfig& c) -> auto& { return c.enhancement.recommender.bpr_lr; }));
  f.push_back(count("rec.bpr_epochs", "BPR epochs", [](RunConfig& c) -> auto& { return c.enhancement.recommender.bpr_epochs; }));
  f.push_back(real("rec.bpr_l2", "BPR L2 weight", [](RunConfig& c) -> auto& { return c.enhancement.recommender.bpr_l2; }));
  return f;
}

}  // namespace

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = make_fields();
  return fields;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : config_fields())
    if (f.key == key) {
      f.set(config, value);
      return;
    }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_text(RunConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    try {
      set_config_value(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(base, buf.str());
  return base;
}

std::string to_text(const RunConfig& config) {
  std::string s;
  for (const auto& f : config_fields()) s += f.key + " = " + f.get(config) + "\n";
  return s;
}

void RunConfig::validate() const {
  pipeline.validate();
  synth.validate();
  if (seeds.empty()) throw ConfigError("seeds must list at least one seed");
  if (!(comparison.sod_theta >= 0.0)) throw ConfigError("sod.theta must be >= 0");
  for (double a : alpha_grid)
    if (!(a >= 0.0)) throw ConfigError("sweep.alpha values must be >= 0");
  for (double t : theta_grid)
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("sweep.theta values must be in (0, 1]");
  if (enhancement.kinds.empty()) throw ConfigError("rec.kinds must not be empty");
  if (enhancement.n_list.empty()) throw ConfigError("rec.n_list must not be empty");
  for (std::size_t n : enhancement.n_list)
    if (n == 0) throw ConfigError("rec.n_list values must be positive");
  if (enhancement.negatives == 0) throw ConfigError("rec.negatives must be positive");
  const auto& r = enhancement.ratios;
  if (r.train < 0 || r.val < 0 || r.test < 0 || std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    throw ConfigError("split shares must be non-negative and sum to 1");
  if (enhancement.recommender.neighbors == 0) throw ConfigError("rec.neighbors must be positive");
  if (enhancement.recommender.dim == 0) throw ConfigError("rec.dim must be positive");
}

}  // namespace mmd
