#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "prefroute/domain.hpp"
#include "prefroute/error.hpp"
#include "prefroute/numerics.hpp"

namespace prefroute {

enum class Split { train, test, ood };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::ood: return "ood";
  }
  return "?";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  if (s == "ood") return Split::ood;
  throw ConfigError("unknown split '" + std::string(s) + "' (train|test|ood)");
}

inline constexpr double kTrainFraction = 0.8;

/// Split membership as a pure function of (prompt_id, seed): prompts whose
/// hash falls below 0.8 train, the rest test. Tasks listed as
/// out-of-distribution are never trained on.
inline Split assign_split(std::string_view prompt_id, std::uint64_t seed, bool ood_task) {
  if (ood_task) return Split::ood;
  const double u = unit_interval(splitmix64(fnv1a64(prompt_id) ^ splitmix64(seed)));
  return u < kTrainFraction ? Split::train : Split::test;
}

inline constexpr int kHashFeatureDim = 32;

/// Deterministic stand-in for a prompt encoder: each coordinate is a seeded
/// hash of the prompt id mapped to [-1, 1].
inline Vector hash_features(std::string_view prompt_id, int dim = kHashFeatureDim, std::uint64_t seed = 0) {
  Vector f(dim);
  const std::uint64_t base = fnv1a64(prompt_id) ^ splitmix64(seed);
  for (int j = 0; j < dim; ++j) {
    f[j] = 2.0 * unit_interval(splitmix64(base + static_cast<std::uint64_t>(j))) - 1.0;
  }
  return f;
}

struct LoggedRecord {
  std::string prompt_id;
  std::string task_id;
  Vector embedding;
  std::vector<Outcome> outcomes;  // one per arm, full information
  Split split = Split::train;

  bool operator==(const LoggedRecord& o) const {
    return prompt_id == o.prompt_id && task_id == o.task_id && split == o.split && outcomes == o.outcomes &&
           embedding.size() == o.embedding.size() && embedding == o.embedding;
  }
};

struct LoggedDataset {
  ArmSet arms;
  int embed_dim = 0;
  std::vector<LoggedRecord> records;
  std::vector<std::string> tasks;  // registry in order of first appearance
  std::uint64_t split_seed = 0;
  bool hashed_embeddings = false;  // true when the hash featurizer stood in
  std::vector<std::string> warnings;

  std::size_t arm_count() const { return arms.size(); }

  std::vector<std::size_t> indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].split == s) out.push_back(i);
    }
    return out;
  }

  std::vector<double> costs(Split s) const {
    std::vector<double> out;
    for (const auto& r : records) {
      if (r.split != s) continue;
      for (const auto& o : r.outcomes) out.push_back(o.cost);
    }
    return out;
  }

  bool operator==(const LoggedDataset& o) const {
    return arms == o.arms && embed_dim == o.embed_dim && records == o.records && tasks == o.tasks &&
           split_seed == o.split_seed && hashed_embeddings == o.hashed_embeddings;
  }
};

/// Cost cap defaulting to the 95th percentile of all arm costs in the
/// training split.
inline RewardSpec default_reward_spec(const LoggedDataset& ds, double q = 0.95) {
  auto costs = ds.costs(Split::train);
  if (costs.empty()) costs = ds.costs(Split::test);
  if (costs.empty()) costs = ds.costs(Split::ood);
  return reward_spec_from_costs(costs, q);
}

struct IngestOptions {
  bool strict = false;                     // reject out-of-range scores instead of clamping
  std::uint64_t split_seed = 0;
  std::set<std::string> ood_tasks;
  std::optional<std::filesystem::path> embeddings;  // sidecar base path (without .bin/.idx)
  int hash_dim = kHashFeatureDim;
};

// ---------------------------------------------------------------------------
// Embedding sidecar: <base>.bin holds little-endian float32 rows; <base>.idx
// is tab-separated text with a header line "prompt_id\toffset\tdim" and one
// line per prompt giving the byte offset of its row.

inline std::filesystem::path sidecar_bin(const std::filesystem::path& base) {
  return base.string() + ".bin";
}
inline std::filesystem::path sidecar_idx(const std::filesystem::path& base) {
  return base.string() + ".idx";
}
inline std::filesystem::path default_sidecar_base(const std::filesystem::path& log) {
  return log.string() + ".emb";
}

namespace detail {

inline void put_f32_le(std::ostream& os, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  const char bytes[4] = {static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                         static_cast<char>((bits >> 16) & 0xFF), static_cast<char>((bits >> 24) & 0xFF)};
  os.write(bytes, 4);
}

inline float get_f32_le(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == '\t') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline void write_embedding_sidecar(const std::vector<std::pair<std::string, Vector>>& rows,
                                    const std::filesystem::path& base) {
  std::ofstream bin(sidecar_bin(base), std::ios::binary | std::ios::trunc);
  std::ofstream idx(sidecar_idx(base), std::ios::trunc);
  if (!bin || !idx) throw DataError("cannot write embedding sidecar at " + base.string());
  idx << "prompt_id\toffset\tdim\n";
  std::uint64_t offset = 0;
  for (const auto& [id, e] : rows) {
    idx << id << '\t' << offset << '\t' << e.size() << '\n';
    for (Eigen::Index j = 0; j < e.size(); ++j) detail::put_f32_le(bin, static_cast<float>(e[j]));
    offset += static_cast<std::uint64_t>(e.size()) * 4;
  }
}

/// prompt_id -> embedding widened to double.
inline std::unordered_map<std::string, Vector> read_embedding_sidecar(const std::filesystem::path& base) {
  const std::string blob = detail::read_file(sidecar_bin(base));
  std::ifstream idx(sidecar_idx(base));
  if (!idx) throw DataError("cannot open " + sidecar_idx(base).string());
  std::unordered_map<std::string, Vector> out;
  std::string line;
  std::getline(idx, line);
  if (detail::split_tabs(line) != std::vector<std::string>{"prompt_id", "offset", "dim"}) {
    throw DataError(sidecar_idx(base).string() + ": bad header");
  }
  std::size_t line_no = 1;
  while (std::getline(idx, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = detail::split_tabs(line);
    if (cols.size() != 3) throw DataError(sidecar_idx(base).string() + ":" + std::to_string(line_no) + ": expected 3 columns");
    std::uint64_t offset = 0;
    int dim = 0;
    try {
      offset = std::stoull(cols[1]);
      dim = std::stoi(cols[2]);
    } catch (const std::exception&) {
      throw DataError(sidecar_idx(base).string() + ":" + std::to_string(line_no) + ": bad offset/dim");
    }
    if (dim < 1 || offset + static_cast<std::uint64_t>(dim) * 4 > blob.size()) {
      throw DataError("embedding for prompt '" + cols[0] + "' lies outside " + sidecar_bin(base).string());
    }
    Vector e(dim);
    const auto* p = reinterpret_cast<const unsigned char*>(blob.data()) + offset;
    for (int j = 0; j < dim; ++j) e[j] = static_cast<double>(detail::get_f32_le(p + 4 * j));
    if (!e.allFinite()) throw DataError("non-finite embedding for prompt '" + cols[0] + "'");
    out.emplace(cols[0], std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion

namespace detail {

struct RawRecord {
  std::string prompt_id;
  std::string task_id;
  std::vector<double> scores;
  std::vector<double> costs;
  std::string where;  // "line N" / "row N" for messages
};

inline LoggedDataset finish_dataset(ArmSet arms, std::vector<RawRecord> raw, const IngestOptions& opt,
                                    std::optional<int> declared_dim, const std::filesystem::path& log_path) {
  LoggedDataset ds;
  ds.arms = std::move(arms);
  ds.split_seed = opt.split_seed;
  const std::size_t k = ds.arms.size();

  std::optional<std::filesystem::path> base = opt.embeddings;
  if (!base && std::filesystem::exists(sidecar_bin(default_sidecar_base(log_path)))) {
    base = default_sidecar_base(log_path);
  }
  std::unordered_map<std::string, Vector> emb;
  if (base) {
    emb = read_embedding_sidecar(*base);
  } else {
    ds.hashed_embeddings = true;
    ds.warnings.push_back("no embedding sidecar; using hash featurizer (d_e = " + std::to_string(opt.hash_dim) + ")");
  }
  ds.embed_dim = base ? declared_dim.value_or(0) : opt.hash_dim;

  std::set<std::string> seen_ids;
  std::set<std::string> seen_tasks;
  for (auto& r : raw) {
    const std::string who = "record '" + r.prompt_id + "' (" + r.where + ")";
    if (r.prompt_id.empty()) throw DataError(r.where + ": missing field 'prompt_id'");
    if (!seen_ids.insert(r.prompt_id).second) throw DataError(who + ": duplicate prompt_id");
    if (r.scores.size() != k) throw DataError(who + ": field 'scores' has " + std::to_string(r.scores.size()) +
                                              " entries, expected " + std::to_string(k));
    if (r.costs.size() != k) throw DataError(who + ": field 'costs' has " + std::to_string(r.costs.size()) +
                                             " entries, expected " + std::to_string(k));
    LoggedRecord rec;
    rec.prompt_id = r.prompt_id;
    rec.task_id = r.task_id;
    rec.outcomes.resize(k);
    for (std::size_t a = 0; a < k; ++a) {
      double q = r.scores[a];
      const double c = r.costs[a];
      const std::string arm = "arm '" + ds.arms[a].id + "'";
      if (!std::isfinite(q)) throw DataError(who + ": field 'scores' for " + arm + " is not finite");
      if (!std::isfinite(c) || c < 0.0) throw DataError(who + ": field 'costs' for " + arm + " must be finite and >= 0");
      if (q < 0.0 || q > 1.0) {
        if (opt.strict) {
          throw DataError(who + ": field 'scores' for " + arm + " = " + std::to_string(q) + " outside [0, 1]");
        }
        ds.warnings.push_back(who + ": score " + std::to_string(q) + " for " + arm + " clamped to [0, 1]");
        q = std::clamp(q, 0.0, 1.0);
      }
      rec.outcomes[a] = Outcome{q, c};
    }
    if (base) {
      auto it = emb.find(r.prompt_id);
      if (it == emb.end()) throw DataError(who + ": no embedding in sidecar " + base->string());
      if (ds.embed_dim == 0) ds.embed_dim = static_cast<int>(it->second.size());
      if (it->second.size() != ds.embed_dim) {
        throw DataError(who + ": embedding has " + std::to_string(it->second.size()) + " entries, expected " +
                        std::to_string(ds.embed_dim));
      }
      rec.embedding = it->second;
    } else {
      rec.embedding = hash_features(r.prompt_id, opt.hash_dim, 0);
    }
    rec.split = assign_split(rec.prompt_id, opt.split_seed, opt.ood_tasks.contains(rec.task_id));
    if (seen_tasks.insert(rec.task_id).second) ds.tasks.push_back(rec.task_id);
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) throw DataError(log_path.string() + ": no records");
  return ds;
}

inline ArmSet arms_from_json(const nlohmann::json& header) {
  if (!header.contains("arms") || !header["arms"].is_array()) {
    throw DataError("header: missing field 'arms'");
  }
  std::vector<ArmDescriptor> arms;
  for (const auto& a : header["arms"]) {
    if (a.is_string()) {
      arms.push_back({a.get<std::string>(), a.get<std::string>()});
    } else if (a.is_object() && a.contains("id")) {
      const auto id = a["id"].get<std::string>();
      arms.push_back({id, a.value("name", id)});
    } else {
      throw DataError("header: arm entries need an 'id'");
    }
  }
  return ArmSet(std::move(arms));
}

}  // namespace detail

/// JSON-lines log. Line 1 is a header object {"arms": [{"id", "name"}, ...],
/// "embed_dim"?: n}; each following line is
/// {"prompt_id", "task_id", "scores": [K], "costs": [K]}.
inline LoggedDataset ingest_jsonl(const std::filesystem::path& path, const IngestOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::optional<ArmSet> arms;
  std::optional<int> declared_dim;
  std::vector<detail::RawRecord> raw;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!arms) {
      arms = detail::arms_from_json(j);
      if (j.contains("embed_dim")) declared_dim = j["embed_dim"].get<int>();
      continue;
    }
    detail::RawRecord r;
    r.where = "line " + std::to_string(line_no);
    try {
      if (!j.contains("prompt_id")) throw DataError(r.where + ": missing field 'prompt_id'");
      r.prompt_id = j["prompt_id"].is_string() ? j["prompt_id"].get<std::string>() : j["prompt_id"].dump();
      const std::string who = "record '" + r.prompt_id + "' (" + r.where + ")";
      for (const char* field : {"task_id", "scores", "costs"}) {
        if (!j.contains(field)) throw DataError(who + ": missing field '" + field + "'");
      }
      r.task_id = j["task_id"].get<std::string>();
      for (const auto& v : j["scores"]) r.scores.push_back(v.is_null() ? std::nan("") : v.get<double>());
      for (const auto& v : j["costs"]) r.costs.push_back(v.is_null() ? std::nan("") : v.get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    raw.push_back(std::move(r));
  }
  if (!arms) throw DataError(path.string() + ": empty log (no header line)");
  return detail::finish_dataset(std::move(*arms), std::move(raw), opt, declared_dim, path);
}

namespace detail {

// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
// newlines.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"': quoted = true; any = true; break;
      case ',': row.push_back(std::move(field)); field.clear(); any = true; break;
      case '\r': break;
      case '\n':
        if (any || !field.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        any = false;
        break;
      default: field.push_back(ch); any = true;
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// RouterBench-style wide CSV. Required columns: `sample_id` (prompt id) and
/// `eval_name` (task id). Every column named `<model>|total_cost` declares an
/// arm whose score is read from the column `<model>`; arms keep the order of
/// their cost columns. Other columns are ignored.
inline LoggedDataset ingest_csv(const std::filesystem::path& path, const IngestOptions& opt = {}) {
  const auto rows = detail::parse_csv(detail::read_file(path));
  if (rows.empty()) throw DataError(path.string() + ": empty csv");
  const auto& header = rows.front();
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(header[i], i);
  for (const char* need : {"sample_id", "eval_name"}) {
    if (!col.contains(need)) throw DataError(path.string() + ": missing column '" + need + "'");
  }
  static constexpr std::string_view kCostSuffix = "|total_cost";
  std::vector<ArmDescriptor> arms;
  std::vector<std::pair<std::size_t, std::size_t>> arm_cols;  // (score, cost)
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& h = header[i];
    if (h.size() > kCostSuffix.size() && h.ends_with(kCostSuffix)) {
      const std::string model = h.substr(0, h.size() - kCostSuffix.size());
      if (!col.contains(model)) throw DataError(path.string() + ": missing arm column '" + model + "'");
      arms.push_back({model, model});
      arm_cols.emplace_back(col[model], i);
    }
  }
  auto number = [&](const std::string& s, const std::string& where, const std::string& field) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw DataError(where + ": column '" + field + "' is not a number ('" + s + "')");
    }
  };
  std::vector<detail::RawRecord> raw;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    detail::RawRecord rec;
    rec.where = "row " + std::to_string(r);
    if (row.size() != header.size()) {
      throw DataError(path.string() + ": " + rec.where + " has " + std::to_string(row.size()) + " columns, header has " +
                      std::to_string(header.size()));
    }
    rec.prompt_id = row[col["sample_id"]];
    rec.task_id = row[col["eval_name"]];
    const std::string who = "record '" + rec.prompt_id + "' (" + rec.where + ")";
    for (std::size_t a = 0; a < arms.size(); ++a) {
      rec.scores.push_back(number(row[arm_cols[a].first], who, arms[a].id));
      rec.costs.push_back(number(row[arm_cols[a].second], who, arms[a].id + std::string(kCostSuffix)));
    }
    raw.push_back(std::move(rec));
  }
  return detail::finish_dataset(ArmSet(std::move(arms)), std::move(raw), opt, std::nullopt, path);
}

/// Dispatches on `format` ("jsonl" | "csv" | "auto" by extension).
inline LoggedDataset ingest(const std::filesystem::path& path, std::string_view format = "auto",
                            const IngestOptions& opt = {}) {
  if (!std::filesystem::exists(path)) throw DataError("dataset not found: " + path.string());
  std::string fmt(format);
  if (fmt == "auto") fmt = path.extension() == ".csv" ? "csv" : "jsonl";
  if (fmt == "jsonl") return ingest_jsonl(path, opt);
  if (fmt == "csv") return ingest_csv(path, opt);
  throw ConfigError("unknown dataset format '" + fmt + "' (jsonl|csv|auto)");
}

/// Writes the JSON-lines log plus its embedding sidecar (<path>.emb.*).
inline void write_dataset(const LoggedDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : ds.arms.arms()) arms.push_back({{"id", a.id}, {"name", a.name}});
  out << nlohmann::json{{"arms", arms}, {"embed_dim", ds.embed_dim}}.dump() << '\n';
  std::vector<std::pair<std::string, Vector>> rows;
  for (const auto& r : ds.records) {
    std::vector<double> scores, costs;
    for (const auto& o : r.outcomes) {
      scores.push_back(o.score);
      costs.push_back(o.cost);
    }
    nlohmann::json j{{"prompt_id", r.prompt_id}, {"task_id", r.task_id}, {"scores", scores}, {"costs", costs}};
    out << j.dump() << '\n';
    rows.emplace_back(r.prompt_id, r.embedding);
  }
  write_embedding_sidecar(rows, default_sidecar_base(path));
}

// ---------------------------------------------------------------------------
// Simulator

/// Grants full-information reads. Only evaluation code should mint an
/// `evaluation()` token; training code carries `training()`.
class AccessToken {
 public:
  static AccessToken evaluation() { return AccessToken(true); }
  static AccessToken training() { return AccessToken(false); }
  bool full_information() const { return full_; }

 private:
  explicit AccessToken(bool full) : full_(full) {}
  bool full_;
};

/// What a learner may see: contexts and the outcome of the arm it chose.
class BanditFeedback {
 public:
  virtual ~BanditFeedback() = default;
  virtual std::size_t arm_count() const = 0;
  virtual int embed_dim() const = 0;
  virtual const RewardSpec& reward_spec() const = 0;
  virtual std::vector<std::size_t> training_records() const = 0;
  virtual const Vector& embedding(std::size_t record) const = 0;
  virtual Outcome step(std::size_t record, std::size_t arm) = 0;
};

/// Replays a full-information log while releasing one outcome per step.
class BanditEnvironment : public BanditFeedback {
 public:
  BanditEnvironment(std::shared_ptr<const LoggedDataset> dataset, RewardSpec spec)
      : dataset_(std::move(dataset)), spec_(spec) {
    if (!dataset_) throw ConfigError("environment needs a dataset");
  }

  explicit BanditEnvironment(std::shared_ptr<const LoggedDataset> dataset)
      : BanditEnvironment(dataset, default_reward_spec(*dataset)) {}

  std::size_t arm_count() const override { return dataset_->arm_count(); }
  int embed_dim() const override { return dataset_->embed_dim; }
  const RewardSpec& reward_spec() const override { return spec_; }
  std::vector<std::size_t> training_records() const override { return dataset_->indices(Split::train); }

  const Vector& embedding(std::size_t record) const override { return at(record).embedding; }

  Outcome step(std::size_t record, std::size_t arm) override {
    const auto& r = at(record);
    if (arm >= r.outcomes.size()) {
      throw DimensionError("arm " + std::to_string(arm) + " out of range (K = " + std::to_string(r.outcomes.size()) + ")");
    }
    audit_.fetch_add(1, std::memory_order_relaxed);
    return r.outcomes[arm];
  }

  std::uint64_t steps_taken() const { return audit_.load(std::memory_order_relaxed); }

  /// Complete outcome row; evaluation only.
  const std::vector<Outcome>& full_outcomes(std::size_t record, const AccessToken& token) const {
    if (!token.full_information()) {
      throw CapabilityError("full_outcomes requires the evaluation capability");
    }
    return at(record).outcomes;
  }

  const LoggedRecord& record_context(std::size_t record) const { return at(record); }
  const LoggedDataset& dataset() const { return *dataset_; }
  std::vector<std::size_t> indices(Split s) const { return dataset_->indices(s); }

 private:
  const LoggedRecord& at(std::size_t record) const {
    if (record >= dataset_->records.size()) {
      throw DimensionError("record " + std::to_string(record) + " out of range");
    }
    return dataset_->records[record];
  }

  std::shared_ptr<const LoggedDataset> dataset_;
  RewardSpec spec_;
  std::atomic<std::uint64_t> audit_{0};
};

// ---------------------------------------------------------------------------
// Synthetic generators with closed-form optimal arms.

enum class SyntheticKind { linear, piecewise, xor_parity };

inline std::string_view to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::linear: return "linear";
    case SyntheticKind::piecewise: return "piecewise";
    case SyntheticKind::xor_parity: return "xor";
  }
  return "?";
}

inline SyntheticKind parse_synthetic_kind(std::string_view s) {
  if (s == "linear") return SyntheticKind::linear;
  if (s == "piecewise" || s == "piecewise-preference") return SyntheticKind::piecewise;
  if (s == "xor" || s == "nonlinear-xor") return SyntheticKind::xor_parity;
  throw ConfigError("unknown synthetic kind '" + std::string(s) + "' (linear|piecewise|xor)");
}

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::piecewise;
  int arms = 2;
  int embed_dim = 8;
  int records = 2000;
  int tasks = 1;
  double cost_scale = 0.01;  // USD of the expensive arm
  // piecewise: per-arm scores, arm 0 pays cost_scale, arm 1 is free
  double high_score = 0.9;
  double low_score = 0.5;
  // xor: score of the matching / non-matching arm
  double match_score = 0.9;
  double miss_score = 0.1;
};

/// Deterministic dataset whose optimal arm per (record, preference) has a
/// closed form:
///  - linear:    q_a = sigmoid(theta_a . e), cost of arm a = cost_scale * a / (K - 1)
///  - piecewise: q = (high, low), c = (cost_scale, 0); arm 0 wins iff
///               (high - low) w_q > w_c
///  - xor:       arm ((e_0 > 0) xor (e_1 > 0)) scores match_score, every other
///               arm miss_score, all at cost cost_scale
inline LoggedDataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.arms < 2 || spec.embed_dim < 1 || spec.records < 1 || spec.tasks < 1 || !(spec.cost_scale > 0.0)) {
    throw ConfigError("invalid synthetic spec");
  }
  if (spec.kind == SyntheticKind::piecewise && spec.arms != 2) throw ConfigError("piecewise generator needs K = 2");
  if (spec.kind == SyntheticKind::xor_parity && spec.embed_dim < 2) throw ConfigError("xor generator needs d_e >= 2");

  SeededRng rng(seed);
  LoggedDataset ds;
  std::vector<ArmDescriptor> arms;
  for (int a = 0; a < spec.arms; ++a) arms.push_back({"arm" + std::to_string(a), "synthetic arm " + std::to_string(a)});
  ds.arms = ArmSet(std::move(arms));
  ds.embed_dim = spec.embed_dim;
  ds.split_seed = seed;
  for (int t = 0; t < spec.tasks; ++t) ds.tasks.push_back("task" + std::to_string(t));

  Matrix theta(spec.arms, spec.embed_dim);
  if (spec.kind == SyntheticKind::linear) {
    const double scale = 2.0 / std::sqrt(static_cast<double>(spec.embed_dim));
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta.data()[i] = scale * rng.normal();
  }

  for (int n = 0; n < spec.records; ++n) {
    LoggedRecord r;
    r.prompt_id = "syn-" + std::to_string(n);
    r.task_id = ds.tasks[static_cast<std::size_t>(n % spec.tasks)];
    r.embedding.resize(spec.embed_dim);
    // float32-representable so the sidecar round trip is exact
    for (int j = 0; j < spec.embed_dim; ++j) {
      r.embedding[j] = static_cast<double>(static_cast<float>(2.0 * rng.uniform() - 1.0));
    }
    r.outcomes.resize(static_cast<std::size_t>(spec.arms));
    switch (spec.kind) {
      case SyntheticKind::linear:
        for (int a = 0; a < spec.arms; ++a) {
          const double logit = theta.row(a).dot(r.embedding);
          r.outcomes[a] = {1.0 / (1.0 + std::exp(-logit)), spec.cost_scale * a / (spec.arms - 1)};
        }
        break;
      case SyntheticKind::piecewise:
        r.outcomes[0] = {spec.high_score, spec.cost_scale};
        r.outcomes[1] = {spec.low_score, 0.0};
        break;
      case SyntheticKind::xor_parity: {
        const std::size_t best = ((r.embedding[0] > 0.0) != (r.embedding[1] > 0.0)) ? 1 : 0;
        for (std::size_t a = 0; a < r.outcomes.size(); ++a) {
          r.outcomes[a] = {a == best ? spec.match_score : spec.miss_score, spec.cost_scale};
        }
        break;
      }
    }
    r.split = assign_split(r.prompt_id, seed, false);
    ds.records.push_back(std::move(r));
  }
  return ds;
}

}  // namespace prefroute
