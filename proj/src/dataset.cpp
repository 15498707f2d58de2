// SPDX-License-Identifier: Apache-2.0
#include "mmd/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "mmd/error.hpp"
#include "mmd/rng.hpp"

namespace mmd {

using json = nlohmann::json;

const char* to_string(UserLabel label) noexcept {
  return label == UserLabel::Pmu ? "pmu" : "normal";
}

UserLabel parse_label(const std::string& text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "pmu" || t == "1" || t == "malicious") return UserLabel::Pmu;
  if (t == "normal" || t == "0") return UserLabel::Normal;
  throw Error("unknown label '" + text + "'");
}

std::vector<std::vector<std::size_t>> Dataset::by_user() const {
  std::vector<std::vector<std::size_t>> out(m);
  for (std::size_t k = 0; k < interactions.size(); ++k) out[interactions[k].user].push_back(k);
  return out;
}

void Dataset::validate() const {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& x : interactions) {
    if (x.user >= m || x.item >= n) throw Error("interaction id out of range");
    if (x.rating < 1 || x.rating > 5) throw Error("rating outside 1..5");
    if (token_count(x.tokens) == 0) throw Error("empty review");
    if (!seen.insert({x.user, x.item}).second) throw Error("duplicate (user, item) pair");
  }
  if (labels && labels->size() != m) throw Error("label count does not match user count");
}

FileFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FileFormat::Csv : FileFormat::Jsonl;
}

Dataset build_dataset(const std::vector<RawRecord>& records) {
  Dataset d;
  std::unordered_map<std::string, std::size_t> user_ids;
  std::unordered_map<std::string, std::size_t> item_ids;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<std::optional<UserLabel>> labels;
  std::size_t labelled = 0;

  for (std::size_t k = 0; k < records.size(); ++k) {
    const RawRecord& r = records[k];
    const std::size_t line = k + 1;
    if (r.rating < 1 || r.rating > 5)
      throw LoadError("rating " + std::to_string(r.rating) + " outside 1..5", line);
    Interaction x;
    x.tokens = tokenize(r.review);
    if (token_count(x.tokens) == 0) throw LoadError("empty review", line);

    auto [uit, unew] = user_ids.try_emplace(r.user, d.user_names.size());
    if (unew) {
      d.user_names.push_back(r.user);
      labels.emplace_back();
    }
    auto [iit, inew] = item_ids.try_emplace(r.item, d.item_names.size());
    if (inew) d.item_names.push_back(r.item);
    x.user = uit->second;
    x.item = iit->second;
    if (!seen.insert({x.user, x.item}).second)
      throw LoadError("duplicate (user, item) pair", line);

    if (r.label) {
      ++labelled;
      auto& slot = labels[x.user];
      if (slot && *slot != *r.label) throw LoadError("conflicting labels for user " + r.user, line);
      slot = r.label;
    }
    x.rating = r.rating;
    x.review = r.review;
    x.fake_rating = r.fake_rating;
    x.negative_review = r.negative_review;
    d.interactions.push_back(std::move(x));
  }
  if (labelled != 0 && labelled != records.size())
    throw LoadError("label present on some records but not all", 0);

  d.m = d.user_names.size();
  d.n = d.item_names.size();
  if (labelled != 0) {
    std::vector<UserLabel> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(*l);
    d.labels = std::move(out);
  }
  return d;
}

namespace {

std::string json_id(const json& v, const char* key, std::size_t line) {
  const auto it = v.find(key);
  if (it == v.end()) throw LoadError(std::string("missing field '") + key + "'", line);
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw LoadError(std::string("field '") + key + "' must be a string or integer", line);
}

std::vector<RawRecord> read_jsonl(std::istream& in) {
  std::vector<RawRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json v;
    try {
      v = json::parse(text);
    } catch (const json::parse_error& e) {
      throw LoadError(std::string("invalid JSON: ") + e.what(), line);
    }
    if (!v.is_object()) throw LoadError("record is not an object", line);
    RawRecord r;
    r.user = json_id(v, "user", line);
    r.item = json_id(v, "item", line);
    const auto rating = v.find("rating");
    if (rating == v.end()) throw LoadError("missing field 'rating'", line);
    if (!rating->is_number()) throw LoadError("rating is not a number", line);
    const double rv = rating->get<double>();
    if (rv != std::floor(rv) || rv < 1 || rv > 5)
      throw LoadError("rating " + rating->dump() + " outside 1..5", line);
    r.rating = static_cast<int>(rv);
    const auto review = v.find("review");
    if (review == v.end() || !review->is_string()) throw LoadError("missing field 'review'", line);
    r.review = review->get<std::string>();
    if (token_count(tokenize(r.review)) == 0) throw LoadError("empty review", line);
    if (auto l = v.find("label"); l != v.end() && !l->is_null()) {
      try {
        r.label = parse_label(l->is_string() ? l->get<std::string>() : l->dump());
      } catch (const Error& e) {
        throw LoadError(e.what(), line);
      }
    }
    r.fake_rating = v.value("fake_rating", false);
    r.negative_review = v.value("negative_review", false);
    out.push_back(std::move(r));
  }
  return out;
}

// RFC 4180 style: fields separated by commas, optionally double-quoted with ""
// as the escaped quote. Quoted fields may span lines.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  ++line;
  return true;
}

std::vector<RawRecord> read_csv(std::istream& in) {
  std::vector<RawRecord> out;
  std::vector<std::string> row;
  std::size_t line = 0;
  if (!read_csv_row(in, row, line)) return out;
  const bool has_label = row.size() >= 5 && row[4] == "label";
  if (row.size() < 4 || row[0] != "user" || row[1] != "item" || row[2] != "rating" ||
      row[3] != "review")
    throw LoadError("CSV header must be user,item,rating,review[,label]", 1);
  while (true) {
    const std::size_t start = line + 1;
    if (!read_csv_row(in, row, line)) break;
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() < 4 || (has_label && row.size() < 5))
      throw LoadError("expected " + std::string(has_label ? "5" : "4") + " fields", start);
    RawRecord r;
    r.user = row[0];
    r.item = row[1];
    if (r.user.empty()) throw LoadError("missing field 'user'", start);
    if (r.item.empty()) throw LoadError("missing field 'item'", start);
    try {
      std::size_t used = 0;
      r.rating = std::stoi(row[2], &used);
      if (used != row[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw LoadError("rating '" + row[2] + "' is not an integer", start);
    }
    if (r.rating < 1 || r.rating > 5)
      throw LoadError("rating " + row[2] + " outside 1..5", start);
    r.review = row[3];
    if (token_count(tokenize(r.review)) == 0) throw LoadError("empty review", start);
    if (has_label && !row[4].empty()) {
      try {
        r.label = parse_label(row[4]);
      } catch (const Error& e) {
        throw LoadError(e.what(), start);
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, FileFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string(), 0);
  const auto records = format == FileFormat::Jsonl ? read_jsonl(in) : read_csv(in);
  return build_dataset(records);
}

Dataset load_dataset(const std::filesystem::path& path) {
  return load_dataset(path, format_from_path(path));
}

void save_dataset(const Dataset& data, const std::filesystem::path& path, FileFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const auto user_name = [&](std::size_t u) {
    return u < data.user_names.size() ? data.user_names[u] : std::to_string(u);
  };
  const auto item_name = [&](std::size_t i) {
    return i < data.item_names.size() ? data.item_names[i] : std::to_string(i);
  };
  if (format == FileFormat::Jsonl) {
    for (const auto& x : data.interactions) {
      json v;
      v["user"] = user_name(x.user);
      v["item"] = item_name(x.item);
      v["rating"] = x.rating;
      v["review"] = x.review;
      if (data.labels) v["label"] = to_string((*data.labels)[x.user]);
      if (x.fake_rating) v["fake_rating"] = true;
      if (x.negative_review) v["negative_review"] = true;
      out << v.dump() << '\n';
    }
  } else {
    out << "user,item,rating,review" << (data.labels ? ",label" : "") << '\n';
    for (const auto& x : data.interactions) {
      out << csv_quote(user_name(x.user)) << ',' << csv_quote(item_name(x.item)) << ','
          << x.rating << ',' << csv_quote(x.review);
      if (data.labels) out << ',' << to_string((*data.labels)[x.user]);
      out << '\n';
    }
  }
}

void save_labels_csv(const Dataset& data, const std::filesystem::path& path) {
  if (!data.labels) throw Error("dataset has no labels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "user,label\n";
  for (std::size_t u = 0; u < data.m; ++u)
    out << (u < data.user_names.size() ? data.user_names[u] : std::to_string(u)) << ','
        << to_string((*data.labels)[u]) << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic generation

Lexicon Lexicon::defaults() {
  Lexicon lex;
  lex.level[0] = {"terrible", "awful", "useless", "broken"};
  lex.level[1] = {"poor", "disappointing", "mediocre", "flimsy"};
  lex.level[2] = {};  // mixed reviews draw from levels 2 and 4
  lex.level[3] = {"good", "nice", "solid", "decent"};
  lex.level[4] = {"excellent", "amazing", "perfect", "superb"};
  return lex;
}

namespace {

int masking_count(double target, int n) {
  return static_cast<int>(std::ceil(target * n - 1e-9));
}

// Splits `masked` interactions into (high rating + negative review, low rating
// + positive review) counts within the per-user fake/negative caps, or nullopt.
std::optional<std::pair<int, int>> masking_split(int masked, int n, double theta_fa,
                                                 double theta_ne) {
  const int big = (masked + 1) / 2;
  const int small = masked / 2;
  const auto ok = [&](int neg, int fake) {
    return neg <= std::floor(theta_ne * n + 1e-9) && fake <= std::floor(theta_fa * n + 1e-9);
  };
  if (ok(small, big)) return std::pair{small, big};
  if (ok(big, small)) return std::pair{big, small};
  return std::nullopt;
}

// Every masked interaction has a low rating or a negative review.
bool below_negative_cap(int masked, int n, double cap) {
  return masked < cap * n - 1e-9;
}

// Largest masked count in [lo, n] the caps allow; lo itself must be feasible.
int max_masking_count(int lo, int n, const SynthConfig& cfg) {
  int hi = lo;
  for (int c = lo + 1; c <= n; ++c)
    if (masking_split(c, n, cfg.theta_fa, cfg.theta_ne) && below_negative_cap(c, n, cfg.pmu_negative_cap)) hi = c;
  return hi;
}

bool in_unit(double x) { return x > 0.0 && x <= 1.0; }
bool in_prob(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void SynthConfig::validate() const {
  if (!in_unit(theta_fa) || !in_unit(theta_ne) || !in_unit(theta_mu_target))
    throw ConfigError("theta_fa, theta_ne, theta_mu_target must lie in (0,1]");
  if (!in_unit(pmu_negative_cap)) throw ConfigError("pmu_negative_cap must lie in (0,1]");
  if (!in_unit(normal_mask_cap)) throw ConfigError("normal_mask_cap must lie in (0,1]");
  if (!in_prob(review_jitter) || !in_prob(lukewarm_share) || !in_prob(careless_prob) ||
      !in_prob(pmu_extreme_prob))
    throw ConfigError("probabilities must lie in [0,1]");
  if (sentences_per_review == 0) throw ConfigError("sentences_per_review must be >= 1");
  for (const IntRange* r : {&interactions_per_user, &pmu_interactions_per_user}) {
    if (r->lo < 5) throw ConfigError("every synthetic user needs at least 5 interactions");
    if (r->lo > r->hi) throw ConfigError("interaction range lo > hi");
  }
  if (n_items == 0 || n_genres == 0 || n_genres > n_items)
    throw ConfigError("need n_items >= n_genres >= 1");
  const int max_per_user = std::max(interactions_per_user.hi, pmu_interactions_per_user.hi);
  if (static_cast<std::size_t>(max_per_user) > n_items)
    throw ConfigError("interactions per user exceed item count");
  for (int k = 0; k < 5; ++k)
    if (k != 2 && lexicon.level[k].empty()) throw ConfigError("lexicon level is empty");
  if (n_pmu == 0) return;
  for (int n = pmu_interactions_per_user.lo; n <= pmu_interactions_per_user.hi; ++n) {
    const int masked = masking_count(theta_mu_target, n);
    if (masked > n || !masking_split(masked, n, theta_fa, theta_ne))
      throw ConfigError("masking constraints infeasible for " + std::to_string(n) +
                        " interactions: theta_mu_target=" + std::to_string(theta_mu_target) +
                        " needs " + std::to_string(masked) +
                        " masked interactions but theta_fa/theta_ne cap them");
    if (!below_negative_cap(masked, n, pmu_negative_cap))
      throw ConfigError("masking constraints infeasible for " + std::to_string(n) +
                        " interactions: " + std::to_string(masked) +
                        " masked interactions reach pmu_negative_cap=" + std::to_string(pmu_negative_cap));
  }
}

namespace {

struct Item {
  double quality;
  int level;  // round(quality)
  std::size_t genre;
  double popularity;
};

class Generator {
 public:
  explicit Generator(const SynthConfig& c) : cfg_(c), rng_(c.seed) {}

  Dataset run();

 private:
  struct Draft {
    std::size_t item;
    int rating;
    int review_level;
    bool careless = false;
  };

  void make_items();
  std::size_t pick_item(const std::vector<std::size_t>& genres, std::set<std::size_t>& used,
                        int min_level, bool random_item);
  std::string make_review(int level);
  int noisy_rating(const Item& it);
  std::vector<Draft> normal_user(const std::vector<std::size_t>& genres);
  std::vector<Draft> pmu_user(const std::vector<std::size_t>& genres);
  std::pair<bool, bool> flags(const Draft& d) const;

  const SynthConfig& cfg_;
  Rng rng_;
  std::vector<Item> items_;
  std::vector<std::vector<std::size_t>> genre_items_;
};

void Generator::make_items() {
  static constexpr std::array<double, 5> kLevelWeights{0.4, 0.07, 0.06, 0.07, 0.4};
  std::discrete_distribution<int> level_dist(kLevelWeights.begin(), kLevelWeights.end());
  items_.resize(cfg_.n_items);
  genre_items_.assign(cfg_.n_genres, {});
  for (std::size_t i = 0; i < cfg_.n_items; ++i) {
    Item& it = items_[i];
    const int level = level_dist(rng_) + 1;
    it.quality = std::clamp(level + uniform(rng_, -0.3, 0.3), 1.0, 5.0);
    it.level = static_cast<int>(std::lround(it.quality));
    it.genre = i % cfg_.n_genres;
    it.popularity = uniform(rng_, 0.1, 1.0);
    genre_items_[it.genre].push_back(i);
  }
}

std::size_t Generator::pick_item(const std::vector<std::size_t>& genres,
                                 std::set<std::size_t>& used, int min_level, bool random_item) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::size_t i;
    if (random_item || genres.empty() || uniform(rng_, 0.0, 1.0) >= 0.85) {
      i = static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<int>(cfg_.n_items) - 1));
    } else {
      const auto& pool = genre_items_[genres[uniform_int(rng_, 0, static_cast<int>(genres.size()) - 1)]];
      std::vector<double> w;
      w.reserve(pool.size());
      for (std::size_t j : pool) w.push_back(items_[j].popularity);
      std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
      i = pool[pick(rng_)];
    }
    if (items_[i].level >= min_level && used.insert(i).second) return i;
  }
  for (std::size_t i = 0; i < cfg_.n_items; ++i)
    if (items_[i].level >= min_level && used.insert(i).second) return i;
  throw ConfigError("not enough items to draw distinct interactions");
}

std::string Generator::make_review(int level) {
  const auto& lex = cfg_.lexicon;
  const auto word = [&](const std::vector<std::string>& v) -> const std::string& {
    return v[static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<int>(v.size()) - 1))];
  };
  std::string out;
  for (std::size_t s = 0; s < cfg_.sentences_per_review; ++s) {
    if (s) out += ' ';
    out += "the item is ";
    if (!lex.fillers.empty() && uniform(rng_, 0.0, 1.0) < 0.5) out += word(lex.fillers) + ' ';
    if (level == 3) {
      out += word(lex.level[3]) + " but " + word(lex.level[1]);
    } else {
      const auto& pool = lex.level[level - 1];
      out += word(pool) + " and " + word(pool);
    }
    out += '.';
  }
  return out;
}

int Generator::noisy_rating(const Item& it) {
  return std::clamp(static_cast<int>(std::lround(it.quality + uniform(rng_, -0.6, 0.6))), 1, 5);
}

std::pair<bool, bool> Generator::flags(const Draft& d) const {
  const Item& it = items_[d.item];
  const bool fake = std::abs(d.rating - it.level) >= 2;
  const bool negative = d.review_level <= 2 && it.level - d.review_level >= 2;
  return {fake, negative};
}

std::vector<Generator::Draft> Generator::normal_user(const std::vector<std::size_t>& genres) {
  const int count = uniform_int(rng_, cfg_.interactions_per_user.lo, cfg_.interactions_per_user.hi);
  const bool lukewarm = uniform(rng_, 0.0, 1.0) < cfg_.lukewarm_share;
  const bool careless = uniform(rng_, 0.0, 1.0) < cfg_.careless_prob;
  const int careless_slot = careless ? uniform_int(rng_, 0, count - 1) : -1;

  std::set<std::size_t> used;
  std::vector<Draft> out;
  for (int k = 0; k < count; ++k) {
    Draft d{};
    if (k == careless_slot) {
      // glowing review, rating slipped to the bottom of the scale
      d.item = pick_item(genres, used, 4, false);
      d.rating = 1;
      d.review_level = 5;
      d.careless = true;
    } else {
      d.item = pick_item(genres, used, 1, false);
      d.rating = noisy_rating(items_[d.item]);
      d.review_level = d.rating;
      if (lukewarm) {
        if (d.rating != 3 && uniform(rng_, 0.0, 1.0) < 0.8) d.review_level = 3;
      } else if (d.rating >= 2 && d.rating <= 4 && uniform(rng_, 0.0, 1.0) < cfg_.review_jitter) {
        d.review_level += uniform(rng_, 0.0, 1.0) < 0.5 ? -1 : 1;
      }
    }
    out.push_back(d);
  }

  // Keep the masking-pair fraction strictly below the cap by making the
  // latest offending interactions consistent again.
  const auto masked = [&] {
    int c = 0;
    for (const auto& d : out) {
      const auto [f, ng] = flags(d);
      c += f != ng;
    }
    return c;
  };
  for (int c = masked(); c >= cfg_.normal_mask_cap * count; c = masked()) {
    bool repaired = false;
    for (auto it = out.rbegin(); it != out.rend() && !repaired; ++it) {
      const auto [f, ng] = flags(*it);
      if (f != ng && !it->careless) {
        it->review_level = it->rating;
        repaired = true;
      }
    }
    for (auto it = out.rbegin(); it != out.rend() && !repaired; ++it) {
      if (it->careless) {
        it->rating = it->review_level;
        it->careless = false;
        repaired = true;
      }
    }
    if (!repaired) break;
  }
  return out;
}

std::vector<Generator::Draft> Generator::pmu_user(const std::vector<std::size_t>& genres) {
  const int count =
      uniform_int(rng_, cfg_.pmu_interactions_per_user.lo, cfg_.pmu_interactions_per_user.hi);
  const int lo = masking_count(cfg_.theta_mu_target, count);
  const int masked = uniform_int(rng_, lo, max_masking_count(lo, count, cfg_));
  const auto [n_high, n_low] = *masking_split(masked, count, cfg_.theta_fa, cfg_.theta_ne);

  // 0 = high rating + negative review, 1 = low rating + positive review, 2 = cover
  std::vector<int> kinds;
  for (int k = 0; k < std::max(n_high, n_low); ++k) {
    if (k < n_high) kinds.push_back(0);
    if (k < n_low) kinds.push_back(1);
  }
  kinds.resize(static_cast<std::size_t>(count), 2);
  std::shuffle(kinds.begin(), kinds.end(), rng_);

  std::set<std::size_t> used;
  std::vector<Draft> out;
  for (int kind : kinds) {
    Draft d{};
    const bool extreme = uniform(rng_, 0.0, 1.0) < cfg_.pmu_extreme_prob;
    if (kind == 0) {
      d.item = pick_item(genres, used, 4, true);
      d.rating = extreme ? 5 : 4;
      d.review_level = 1;
    } else if (kind == 1) {
      d.item = pick_item(genres, used, 4, true);
      d.rating = extreme ? 1 : 2;
      d.review_level = 5;
    } else {
      d.item = pick_item(genres, used, 4, false);
      d.rating = std::max(noisy_rating(items_[d.item]), 3);
      d.review_level = d.rating;
    }
    out.push_back(d);
  }
  return out;
}

Dataset Generator::run() {
  make_items();
  const std::size_t m = cfg_.n_normal + cfg_.n_pmu;
  std::vector<UserLabel> kinds(m, UserLabel::Normal);
  std::fill(kinds.begin() + static_cast<std::ptrdiff_t>(cfg_.n_normal), kinds.end(), UserLabel::Pmu);
  std::shuffle(kinds.begin(), kinds.end(), rng_);

  Dataset d;
  d.m = m;
  std::vector<std::size_t> item_index(cfg_.n_items, SIZE_MAX);
  for (std::size_t u = 0; u < m; ++u) {
    std::vector<std::size_t> genres;
    const std::size_t g0 = static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<int>(cfg_.n_genres) - 1));
    genres.push_back(g0);
    if (cfg_.n_genres > 1)
      genres.push_back((g0 + 1 + static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<int>(cfg_.n_genres) - 2))) % cfg_.n_genres);
    const auto drafts = kinds[u] == UserLabel::Pmu ? pmu_user(genres) : normal_user(genres);
    d.user_names.push_back("u" + std::to_string(u));
    for (const Draft& dr : drafts) {
      Interaction x;
      x.user = u;
      // items are numbered by first appearance so save/load is the identity
      if (item_index[dr.item] == SIZE_MAX) {
        item_index[dr.item] = d.item_names.size();
        d.item_names.push_back("i" + std::to_string(dr.item));
      }
      x.item = item_index[dr.item];
      x.rating = dr.rating;
      x.review = make_review(dr.review_level);
      x.tokens = tokenize(x.review);
      const auto [fake, negative] = flags(dr);
      x.fake_rating = fake;
      x.negative_review = negative;
      d.interactions.push_back(std::move(x));
    }
  }
  d.n = d.item_names.size();
  d.labels = std::move(kinds);
  return d;
}

}  // namespace

Dataset generate_synthetic(const SynthConfig& config) {
  config.validate();
  return Generator(config).run();
}

double masking_fraction(const Dataset& data, std::size_t user) {
  std::size_t total = 0;
  std::size_t masked = 0;
  for (const auto& x : data.interactions) {
    if (x.user != user) continue;
    ++total;
    masked += x.fake_rating != x.negative_review;
  }
  return total ? static_cast<double>(masked) / static_cast<double>(total) : 0.0;
}

DatasetStats dataset_stats(const Dataset& data) {
  DatasetStats s;
  s.users = data.m;
  s.items = data.n;
  s.interactions = data.interactions.size();
  if (data.m && data.n)
    s.sparsity = static_cast<double>(s.interactions) / (static_cast<double>(data.m) * static_cast<double>(data.n));
  std::size_t sentences = 0;
  std::size_t words = 0;
  for (const auto& x : data.interactions) {
    sentences += x.tokens.size();
    words += token_count(x.tokens);
  }
  if (sentences) s.avg_words_per_sentence = static_cast<double>(words) / static_cast<double>(sentences);
  if (s.interactions) s.avg_sentences_per_review = static_cast<double>(sentences) / static_cast<double>(s.interactions);
  if (data.m) s.avg_reviews_per_user = static_cast<double>(s.interactions) / static_cast<double>(data.m);
  if (data.labels && data.m) {
    const auto pmu = std::count(data.labels->begin(), data.labels->end(), UserLabel::Pmu);
    s.pmu_ratio = static_cast<double>(pmu) / static_cast<double>(data.m);
  }
  return s;
}

namespace {

// Largest-remainder allocation of `count` items over the ratios.
std::array<std::size_t, 3> allocate(std::size_t count, const SplitRatios& r) {
  const std::array<double, 3> ratio{r.train, r.val, r.test};
  std::array<std::size_t, 3> out{};
  std::array<double, 3> rem{};
  std::size_t used = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = ratio[k] * static_cast<double>(count);
    out[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[k] = exact - static_cast<double>(out[k]);
    used += out[k];
  }
  while (used < count) {
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (rem[k] > rem[best] + 1e-12) best = k;
    ++out[best];
    rem[best] = -1.0;
    ++used;
  }
  if (r.train > 0 && out[0] == 0 && count >= 3) {
    const int donor = out[1] >= out[2] ? 1 : 2;
    --out[donor];
    ++out[0];
  }
  return out;
}

Dataset empty_like(const Dataset& d) {
  Dataset out;
  out.m = d.m;
  out.n = d.n;
  out.labels = d.labels;
  out.user_names = d.user_names;
  out.item_names = d.item_names;
  return out;
}

}  // namespace

DatasetSplit split(const Dataset& data, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw ConfigError("split ratios must be non-negative and sum to 1");
  Rng rng(seed);
  DatasetSplit out{empty_like(data), empty_like(data), empty_like(data)};
  for (auto idx : data.by_user()) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto counts = allocate(idx.size(), ratios);
    std::size_t k = 0;
    for (std::size_t c = 0; c < counts[0]; ++c) out.train.interactions.push_back(data.interactions[idx[k++]]);
    for (std::size_t c = 0; c < counts[1]; ++c) out.val.interactions.push_back(data.interactions[idx[k++]]);
    for (std::size_t c = 0; c < counts[2]; ++c) out.test.interactions.push_back(data.interactions[idx[k++]]);
  }
  return out;
}

Dataset drop_users(const Dataset& data, const std::vector<std::size_t>& users) {
  std::vector<bool> dropped(data.m, false);
  for (std::size_t u : users)
    if (u < data.m) dropped[u] = true;
  std::vector<std::size_t> remap(data.m, SIZE_MAX);
  Dataset out;
  out.n = data.n;
  out.item_names = data.item_names;
  std::vector<UserLabel> labels;
  for (std::size_t u = 0; u < data.m; ++u) {
    if (dropped[u]) continue;
    remap[u] = out.m++;
    if (u < data.user_names.size()) out.user_names.push_back(data.user_names[u]);
    if (data.labels) labels.push_back((*data.labels)[u]);
  }
  if (data.labels) out.labels = std::move(labels);
  for (const auto& x : data.interactions) {
    if (dropped[x.user]) continue;
    Interaction y = x;
    y.user = remap[x.user];
    out.interactions.push_back(std::move(y));
  }
  return out;
}

}  // namespace mmd
