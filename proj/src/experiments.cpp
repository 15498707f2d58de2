// SPDX-License-Identifier: Apache-2.0
#include "mmd/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

#include "mmd/error.hpp"
#include "mmd/rng.hpp"

namespace mmd {

namespace {

const std::vector<UserLabel>& truth_of(const Dataset& data) {
  if (!data.labels) throw ConfigError("evaluation needs a labeled dataset");
  return *data.labels;
}

std::size_t count_pmu(const std::vector<UserLabel>& v) {
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), UserLabel::Pmu));
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string conf_cells(const Confusion& c, const Rates& r) {
  return std::to_string(c.tp) + ',' + std::to_string(c.fn) + ',' + std::to_string(c.fp) + ',' +
         std::to_string(c.tn) + ',' + format_value(r.sen) + ',' + format_value(r.spe) + ',' +
         format_value(r.f);
}

}  // namespace

std::string format_value(std::optional<double> v) {
  if (!v) return "NA";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, res.ptr);
}

std::vector<MethodRow> compare_methods(const Dataset& data, const StageScores& scores,
                                       const DetectionReport& mmd, const PipelineConfig& config,
                                       const ComparisonConfig& cmp) {
  const auto& truth = truth_of(data);
  std::vector<MethodRow> rows;
  auto add = [&](const std::string& name, const Confusion& c, std::size_t flagged) {
    MethodRow r;
    r.method = name;
    r.seed = config.seed;
    r.conf = c;
    r.rates = sen_spe_f(c);
    r.precision = precision(c);
    r.flagged = flagged;
    rows.push_back(r);
  };
  add("MMD", confusion(mmd.detected, truth), mmd.detected.size());
  add("MUP-only", confusion(mmd.candidates, truth), mmd.candidates.size());
  const auto sod = baseline_sod(data, scores.review_scores, cmp.sod_theta);
  add("SOD", confusion(sod, truth), count_pmu(sod));
  const auto signal = mean_gap_per_user(data, scores.rating_scores, scores.review_scores);
  const auto km = baseline_kmeanspp(scores.factors, signal, derive_seed(config.seed, "kmeans++"),
                                    &mmd.candidates);
  add("K-means++", confusion(km.labels, truth), count_pmu(km.labels));
  return rows;
}

std::vector<AblationRow> ablation_suite(const Dataset& data, const StageScores& scores,
                                        const PipelineConfig& base) {
  const auto& truth = truth_of(data);
  std::vector<AblationRow> rows;
  for (MetricForm form : {MetricForm::Euclidean, MetricForm::Diagonal, MetricForm::Full, MetricForm::Restricted}) {
    for (bool att : {true, false}) {
      PipelineConfig cfg = base;
      cfg.form = form;
      cfg.attention = att;
      const DetectionReport rep = detect_from_scores(data, scores, cfg);
      AblationRow r;
      r.form = form;
      r.attention = att;
      r.seed = base.seed;
      r.parameters = metric_parameter_count(form, scores.factors.dim(), cfg.k);
      r.conf = confusion(rep.detected, truth);
      r.rates = sen_spe_f(r.conf);
      r.mup_only = rep.mup_only;
      rows.push_back(r);
    }
  }
  return rows;
}

std::vector<double> default_alpha_grid() {
  std::vector<double> v;
  for (int i = 0; i < 8; ++i) v.push_back(1.0 + 0.5 * i);
  return v;
}

std::vector<double> default_theta_grid() {
  std::vector<double> v;
  for (int i = 1; i <= 10; ++i) v.push_back(i / 10.0);
  return v;
}

std::vector<SweepRow> sweep(const Dataset& data, const StageScores& scores, const PipelineConfig& base,
                            const std::string& parameter, const std::vector<double>& values) {
  const auto& truth = truth_of(data);
  if (parameter != "alpha_g" && parameter != "theta_mu")
    throw ConfigError("sweep parameter must be alpha_g or theta_mu");
  std::vector<SweepRow> rows;
  for (double v : values) {
    PipelineConfig cfg = base;
    (parameter == "alpha_g" ? cfg.alpha_g : cfg.theta_mu) = v;
    const DetectionReport rep = detect_from_scores(data, scores, cfg);
    SweepRow r;
    r.parameter = parameter;
    r.value = v;
    r.seed = base.seed;
    r.candidates = rep.candidates.size();
    r.conf = confusion(rep.detected, truth);
    r.rates = sen_spe_f(r.conf);
    r.mup_only = rep.mup_only;
    rows.push_back(r);
  }
  return rows;
}

std::vector<EnhancementRow> enhancement_experiment(const Dataset& data,
                                                   const std::set<std::size_t>& detected,
                                                   const EnhancementConfig& config,
                                                   std::uint64_t seed) {
  // random arm: same count, uniform without replacement
  std::vector<std::size_t> all(data.m);
  std::iota(all.begin(), all.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "random-drop"));
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<std::size_t> random_drop(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(std::min(detected.size(), all.size())));
  std::sort(random_drop.begin(), random_drop.end());
  const std::vector<std::size_t> detected_drop(detected.begin(), detected.end());

  std::vector<EnhancementRow> rows;
  const std::pair<const char*, const std::vector<std::size_t>*> arms[2] = {{"detected", &detected_drop},
                                                                          {"random", &random_drop}};
  const std::uint64_t split_seed = derive_seed(seed, "split");
  const std::uint64_t rank_seed = derive_seed(seed, "rank");
  RecommenderConfig rc = config.recommender;
  rc.seed = derive_seed(seed, "recommender");
  for (const auto& [arm, drop] : arms) {
    const Dataset kept = drop_users(data, *drop);
    const DatasetSplit parts = split(kept, config.ratios, split_seed);
    for (RecommenderKind kind : config.kinds) {
      const auto rec = train_recommender(kind, parts.train, rc);
      const RankingResult rr = rank_eval(*rec, parts.train, parts.test, config.n_list, config.negatives,
                                         rank_seed, config.threads);
      for (std::size_t k = 0; k < config.n_list.size(); ++k) {
        EnhancementRow r;
        r.kind = kind;
        r.arm = arm;
        r.n = config.n_list[k];
        r.seed = seed;
        r.dropped = drop->size();
        r.hr = rr.hr[k];
        r.ndcg = rr.ndcg[k];
        rows.push_back(r);
      }
    }
  }
  return rows;
}

void write_methods_csv(const std::vector<MethodRow>& rows, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "method,seed,tp,fn,fp,tn,sen,spe,f,precision,flagged\n";
  for (const auto& r : rows)
    out << r.method << ',' << r.seed << ',' << conf_cells(r.conf, r.rates) << ',' << format_value(r.precision)
        << ',' << r.flagged << '\n';
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "form,attention,seed,parameters,tp,fn,fp,tn,sen,spe,f,mup_only\n";
  for (const auto& r : rows)
    out << form_tag(r.form) << ',' << (r.attention ? "on" : "off") << ',' << r.seed << ',' << r.parameters << ','
        << conf_cells(r.conf, r.rates) << ',' << (r.mup_only ? 1 : 0) << '\n';
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "parameter,value,seed,candidates,tp,fn,fp,tn,sen,spe,f,mup_only\n";
  for (const auto& r : rows)
    out << r.parameter << ',' << format_value(r.value) << ',' << r.seed << ',' << r.candidates << ','
        << conf_cells(r.conf, r.rates) << ',' << (r.mup_only ? 1 : 0) << '\n';
}

void write_enhancement_csv(const std::vector<EnhancementRow>& rows, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "recommender,arm,n,seed,dropped,hr,ndcg\n";
  for (const auto& r : rows)
    out << to_string(r.kind) << ',' << r.arm << ',' << r.n << ',' << r.seed << ',' << r.dropped << ','
        << format_value(r.hr) << ',' << format_value(r.ndcg) << '\n';
}

}  // namespace mmd
