// SPDX-License-Identifier: Apache-2.0
//
// mmd: command-line driver.
//
//   mmd synth   [--config F] [--key value ...]   synthetic dataset + labels
//   mmd detect  --data D [...]                   detection report
//   mmd eval | ablate | sweep | enhance [...]    multi-seed experiment tables
//
// Exit codes: 0 success, 1 error, 2 detection ran in MUP-only mode.
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmd/config.hpp"
#include "mmd/error.hpp"

namespace {

using namespace mmd;

struct SeedRun {
  Dataset data;
  StageScores scores;
  PipelineConfig pipeline;
  std::filesystem::path dir;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void prepare_out(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  write_text(cfg.out / "config.txt", to_text(cfg));
}

Dataset load_input(const RunConfig& cfg) {
  if (cfg.data.empty()) throw Error("no dataset given (use --data)");
  if (!std::filesystem::exists(cfg.data)) throw Error("dataset not found: " + cfg.data.string());
  Dataset d = load_dataset(cfg.data);
  if (d.m == 0 || d.interactions.empty()) throw Error("dataset is empty: " + cfg.data.string());
  return d;
}

// Dataset of one seed: the given file, or a synthetic sample generated from
// that seed. Stage checkpoints live under <out>/seed-<s>.
SeedRun seed_run(const RunConfig& cfg, std::uint64_t seed) {
  SeedRun run;
  if (!cfg.data.empty()) {
    run.data = load_input(cfg);
  } else {
    SynthConfig sc = cfg.synth;
    sc.seed = seed;
    run.data = generate_synthetic(sc);
  }
  run.pipeline = cfg.pipeline;
  run.pipeline.seed = seed;
  run.dir = cfg.out / ("seed-" + std::to_string(seed));
  const auto t0 = std::chrono::steady_clock::now();
  run.scores = compute_scores(run.data, run.pipeline, run.dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "seed " << seed << ": stage scores ready (" << static_cast<long>(secs) << " s)\n";
  return run;
}

int cmd_synth(const RunConfig& cfg) {
  prepare_out(cfg);
  const Dataset d = generate_synthetic(cfg.synth);
  save_dataset(d, cfg.out / "data.jsonl", FileFormat::Jsonl);
  if (d.labels) save_labels_csv(d, cfg.out / "labels.csv");
  const DatasetStats s = dataset_stats(d);
  nlohmann::ordered_json v{{"users", s.users},
                           {"items", s.items},
                           {"interactions", s.interactions},
                           {"sparsity", s.sparsity},
                           {"avg_words_per_sentence", s.avg_words_per_sentence},
                           {"avg_sentences_per_review", s.avg_sentences_per_review},
                           {"avg_reviews_per_user", s.avg_reviews_per_user}};
  if (s.pmu_ratio) v["pmu_ratio"] = *s.pmu_ratio;
  write_text(cfg.out / "stats.json", v.dump(2) + "\n");
  std::cout << "wrote " << (cfg.out / "data.jsonl").string() << " (" << s.users << " users, "
            << s.interactions << " interactions)\n";
  return 0;
}

int cmd_detect(const RunConfig& cfg) {
  const Dataset d = load_input(cfg);
  prepare_out(cfg);
  const DetectionReport rep = run_mmd(d, cfg.pipeline, cfg.out);
  save_report_json(rep, d, cfg.out / "report.json");
  save_report_labels_csv(rep, d, cfg.out / "labels.csv");
  std::cout << (rep.mup_only ? "MUP-only" : "MMD") << ": " << rep.candidates.size() << " candidates, "
            << rep.detected.size() << " detected\n";
  if (d.labels) {
    const Rates r = sen_spe_f(confusion(rep.detected, *d.labels));
    std::cout << "SEN " << format_value(r.sen) << " SPE " << format_value(r.spe) << " F "
              << format_value(r.f) << "\n";
  }
  return rep.mup_only ? 2 : 0;
}

int cmd_eval(const RunConfig& cfg) {
  prepare_out(cfg);
  std::vector<MethodRow> rows;
  for (std::uint64_t s : cfg.seeds) {
    const SeedRun run = seed_run(cfg, s);
    const DetectionReport rep = detect_from_scores(run.data, run.scores, run.pipeline, run.dir);
    save_report_json(rep, run.data, run.dir / "report.json");
    auto r = compare_methods(run.data, run.scores, rep, run.pipeline, cfg.comparison);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  write_methods_csv(rows, cfg.out / "methods.csv");
  std::cout << "wrote " << (cfg.out / "methods.csv").string() << "\n";
  return 0;
}

int cmd_ablate(const RunConfig& cfg) {
  prepare_out(cfg);
  std::vector<AblationRow> rows;
  for (std::uint64_t s : cfg.seeds) {
    const SeedRun run = seed_run(cfg, s);
    auto r = ablation_suite(run.data, run.scores, run.pipeline);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  write_ablation_csv(rows, cfg.out / "ablation.csv");
  std::cout << "wrote " << (cfg.out / "ablation.csv").string() << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  prepare_out(cfg);
  std::vector<SweepRow> rows;
  for (std::uint64_t s : cfg.seeds) {
    const SeedRun run = seed_run(cfg, s);
    auto a = sweep(run.data, run.scores, run.pipeline, "alpha_g", cfg.alpha_grid);
    auto t = sweep(run.data, run.scores, run.pipeline, "theta_mu", cfg.theta_grid);
    rows.insert(rows.end(), a.begin(), a.end());
    rows.insert(rows.end(), t.begin(), t.end());
  }
  write_sweep_csv(rows, cfg.out / "sweep.csv");
  std::cout << "wrote " << (cfg.out / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_enhance(const RunConfig& cfg) {
  prepare_out(cfg);
  std::vector<EnhancementRow> rows;
  for (std::uint64_t s : cfg.seeds) {
    const SeedRun run = seed_run(cfg, s);
    const DetectionReport rep = detect_from_scores(run.data, run.scores, run.pipeline, run.dir);
    auto r = enhancement_experiment(run.data, rep.detected, cfg.enhancement, s);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  write_enhancement_csv(rows, cfg.out / "enhance.csv");
  std::cout << "wrote " << (cfg.out / "enhance.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detection of professional malicious users from rating/review sentiment gaps"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::string config_path;
  app.add_option("--config", config_path, "key = value config file; flags below override it");

  const RunConfig defaults;
  std::vector<std::pair<std::string, std::string*>> slots;
  slots.reserve(config_fields().size());
  std::map<std::string, std::string> raw;
  for (const auto& f : config_fields()) raw[f.key];
  for (const auto& f : config_fields()) {
    std::string* slot = &raw[f.key];
    auto* opt = app.add_option("--" + f.key, *slot, f.help);
    opt->default_str(f.get(defaults))->type_name("");
    opt->group("Settings");
    slots.emplace_back(f.key, slot);
  }

  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&);
  };
  const Cmd cmds[] = {
      {"synth", "Generate a labeled synthetic dataset", cmd_synth},
      {"detect", "Run the detector on --data", cmd_detect},
      {"eval", "Compare MMD, MUP-only, SOD and k-means++ over seeds", cmd_eval},
      {"ablate", "Metric form and attention ablation over seeds", cmd_ablate},
      {"sweep", "alpha_g and theta_mu sweeps over seeds", cmd_sweep},
      {"enhance", "Recommender quality after dropping detected vs random users", cmd_enhance},
  };
  for (const auto& c : cmds) app.add_subcommand(c.name, c.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path, cfg);
    for (const auto& [key, slot] : slots) {
      if (app.count("--" + key) > 0) set_config_value(cfg, key, *slot);
    }
    cfg.validate();
    for (const auto& c : cmds)
      if (app.got_subcommand(c.name)) return c.run(cfg);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
