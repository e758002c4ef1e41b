#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prefroute/bandits.hpp"
#include "prefroute/domain.hpp"
#include "prefroute/environment.hpp"
#include "prefroute/error.hpp"
#include "prefroute/policy.hpp"

namespace prefroute {

/// Deterministic routing decision for one record under preference w.
using Router = std::function<std::size_t(std::size_t record, const Vector& embedding, const PreferenceVector& w)>;

inline Router policy_router(const PolicyNetwork& net) {
  return [&net](std::size_t, const Vector& e, const PreferenceVector& w) { return select_argmax(net.forward(e, w)); };
}

inline Router agent_router(const LinearBanditAgent& agent) {
  return [&agent](std::size_t, const Vector& e, const PreferenceVector& w) {
    return agent.select_greedy(joint_features(e, w));
  };
}

inline Router fixed_router(std::size_t arm) {
  return [arm](std::size_t, const Vector&, const PreferenceVector&) { return arm; };
}

/// Best arm per record by exhaustive reward comparison (ties to the lowest
/// index). Needs full-information rows.
inline std::size_t oracle_arm(const std::vector<Outcome>& row, const PreferenceVector& w, const RewardSpec& spec) {
  std::size_t best = 0;
  double best_r = compute_reward(w, row[0], spec);
  for (std::size_t a = 1; a < row.size(); ++a) {
    const double r = compute_reward(w, row[a], spec);
    if (r > best_r) {
      best = a;
      best_r = r;
    }
  }
  return best;
}

inline Router oracle_router(const BanditEnvironment& env, AccessToken token) {
  return [&env, token](std::size_t record, const Vector&, const PreferenceVector& w) {
    return oracle_arm(env.full_outcomes(record, token), w, env.reward_spec());
  };
}

struct TaskMetrics {
  std::string task;
  std::size_t count = 0;
  double score_pct = 0.0;  // mean score x 100
  double cost_usd = 0.0;   // mean cost per query
  double mean_reward = 0.0;

  bool operator==(const TaskMetrics&) const = default;
};

/// Metrics at one preference: per task plus unweighted means across tasks.
struct EvaluationFragment {
  double w_c = 0.5;
  std::vector<TaskMetrics> tasks;
  double score_pct = 0.0;
  double cost_usd = 0.0;
  double mean_reward = 0.0;

  bool operator==(const EvaluationFragment&) const = default;
};

struct EvaluationReport {
  EvaluationFragment point;               // the headline preference
  std::vector<EvaluationFragment> sweep;  // sorted by w_c
  nlohmann::json meta = nlohmann::json::object();

  bool operator==(const EvaluationReport&) const = default;
};

/// Unweighted mean, the arithmetic behind every "Avg" column.
inline double average(const std::vector<double>& values) {
  if (values.empty()) throw DataError("average of nothing");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

/// Fixed-point rendering with the given number of decimals.
inline std::string format_fixed(double value, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s(buf);
  if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

/// Argmax routing over `records`, reading the chosen arm's outcome from the
/// full rows. Tasks appear in dataset registry order.
inline EvaluationFragment evaluate(const Router& router, const BanditEnvironment& env,
                                   const std::vector<std::size_t>& records, const PreferenceVector& w,
                                   const AccessToken& token) {
  if (records.empty()) throw DataError("evaluate: no records in the requested split");
  struct Acc {
    std::size_t n = 0;
    double score = 0.0, cost = 0.0, reward = 0.0;
  };
  std::map<std::string, Acc> acc;
  for (const std::size_t i : records) {
    const auto& row = env.full_outcomes(i, token);
    const auto& rec = env.record_context(i);
    const std::size_t a = router(i, rec.embedding, w);
    if (a >= row.size()) throw DimensionError("router chose arm " + std::to_string(a) + " out of range");
    auto& t = acc[rec.task_id];
    ++t.n;
    t.score += row[a].score;
    t.cost += row[a].cost;
    t.reward += compute_reward(w, row[a], env.reward_spec());
  }
  EvaluationFragment f;
  f.w_c = w.w_c();
  std::vector<double> scores, costs, rewards;
  for (const auto& task : env.dataset().tasks) {
    auto it = acc.find(task);
    if (it == acc.end()) continue;
    const auto n = static_cast<double>(it->second.n);
    TaskMetrics m{task, it->second.n, 100.0 * it->second.score / n, it->second.cost / n, it->second.reward / n};
    scores.push_back(m.score_pct);
    costs.push_back(m.cost_usd);
    rewards.push_back(m.mean_reward);
    f.tasks.push_back(std::move(m));
  }
  f.score_pct = average(scores);
  f.cost_usd = average(costs);
  f.mean_reward = average(rewards);
  return f;
}

inline EvaluationFragment evaluate(const Router& router, const BanditEnvironment& env, Split split,
                                   const PreferenceVector& w, const AccessToken& token) {
  return evaluate(router, env, env.indices(split), w, token);
}

inline const std::vector<double>& default_sweep_grid() {
  static const std::vector<double> grid{0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0};
  return grid;
}

/// Evaluates at w = (1 - w_c, w_c) for every grid value; points sorted by w_c.
inline std::vector<EvaluationFragment> sweep_preferences(const Router& router, const BanditEnvironment& env,
                                                         const std::vector<std::size_t>& records,
                                                         std::vector<double> grid, const AccessToken& token) {
  for (const double g : grid) {
    if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("sweep grid value " + std::to_string(g) + " outside [0, 1]");
  }
  std::sort(grid.begin(), grid.end());
  std::vector<EvaluationFragment> curve;
  for (const double g : grid) curve.push_back(evaluate(router, env, records, PreferenceVector::from_cost_weight(g), token));
  return curve;
}

inline std::vector<EvaluationFragment> sweep_preferences(const Router& router, const BanditEnvironment& env,
                                                         Split split, std::vector<double> grid,
                                                         const AccessToken& token) {
  return sweep_preferences(router, env, env.indices(split), std::move(grid), token);
}

struct Comparison {
  double score_improvement_pct = 0.0;
  double cost_reduction_pct = 0.0;
};

/// Relative score gain and cost reduction of `candidate` against `reference`.
inline Comparison compare(double ref_score, double ref_cost, double cand_score, double cand_cost) {
  if (ref_score == 0.0) throw DataError("compare: reference score is zero");
  if (ref_cost == 0.0) throw DataError("compare: reference cost is zero");
  return {(cand_score - ref_score) / ref_score * 100.0, (ref_cost - cand_cost) / ref_cost * 100.0};
}

inline Comparison compare(const EvaluationFragment& reference, const EvaluationFragment& candidate) {
  std::vector<std::string> a, b;
  for (const auto& t : reference.tasks) a.push_back(t.task);
  for (const auto& t : candidate.tasks) b.push_back(t.task);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) throw DataError("compare: reports cover different tasks");
  return compare(reference.score_pct, reference.cost_usd, candidate.score_pct, candidate.cost_usd);
}

inline Comparison compare(const EvaluationReport& reference, const EvaluationReport& candidate) {
  return compare(reference.point, candidate.point);
}

// ---------------------------------------------------------------------------
// Serialization. JSON keeps full precision; CSV renders score_pct with two
// decimals and cost_usd at full precision.

inline nlohmann::json fragment_to_json(const EvaluationFragment& f) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : f.tasks) {
    tasks.push_back({{"task", t.task},
                     {"count", t.count},
                     {"score_pct", t.score_pct},
                     {"cost_usd", t.cost_usd},
                     {"mean_reward", t.mean_reward}});
  }
  return {{"w_c", f.w_c},
          {"w_q", 1.0 - f.w_c},
          {"tasks", tasks},
          {"avg_score_pct", f.score_pct},
          {"avg_cost_usd", f.cost_usd},
          {"avg_reward", f.mean_reward}};
}

inline EvaluationFragment fragment_from_json(const nlohmann::json& j) {
  EvaluationFragment f;
  f.w_c = j.at("w_c").get<double>();
  for (const auto& t : j.at("tasks")) {
    f.tasks.push_back({t.at("task").get<std::string>(), t.value("count", std::size_t{0}), t.at("score_pct").get<double>(),
                       t.at("cost_usd").get<double>(), t.value("mean_reward", 0.0)});
  }
  f.score_pct = j.at("avg_score_pct").get<double>();
  f.cost_usd = j.at("avg_cost_usd").get<double>();
  f.mean_reward = j.value("avg_reward", 0.0);
  return f;
}

inline nlohmann::json report_to_json(const EvaluationReport& r) {
  nlohmann::json sweep = nlohmann::json::array();
  for (const auto& p : r.sweep) sweep.push_back(fragment_to_json(p));
  return {{"format", "prefroute.report"}, {"version", 1}, {"meta", r.meta}, {"point", fragment_to_json(r.point)},
          {"sweep", sweep}};
}

inline EvaluationReport report_from_json(const nlohmann::json& j) {
  try {
    EvaluationReport r;
    r.meta = j.value("meta", nlohmann::json::object());
    r.point = fragment_from_json(j.at("point"));
    if (j.contains("sweep")) {
      for (const auto& p : j.at("sweep")) r.sweep.push_back(fragment_from_json(p));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

/// Shortest fixed-notation text that parses back to the same double.
inline std::string format_full(double v) {
  char buf[512];  // enough for any double in fixed notation
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

/// CSV with columns task, w_c, score_pct, cost_usd: one row per task per point.
inline std::string fragments_to_csv(const std::vector<EvaluationFragment>& points) {
  std::string out = "task,w_c,score_pct,cost_usd\n";
  for (const auto& p : points) {
    for (const auto& t : p.tasks) {
      out += t.task + "," + format_full(p.w_c) + "," + format_fixed(t.score_pct, 2) + "," + format_full(t.cost_usd) + "\n";
    }
  }
  return out;
}

}  // namespace prefroute
