#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "prefroute/error.hpp"
#include "prefroute/numerics.hpp"

namespace prefroute {

/// User trade-off between performance (w_q) and cost (w_c) on the 1-simplex.
/// Construct through `from_cost_weight` or `from_score_weight` so the pair
/// sums to one by construction.
class PreferenceVector {
 public:
  PreferenceVector() = default;

  // Validating constructor for externally supplied pairs.
  PreferenceVector(double w_q, double w_c) : w_q_(w_q), w_c_(w_c) {
    if (!std::isfinite(w_q) || !std::isfinite(w_c) || w_q < 0.0 || w_c < 0.0 ||
        std::abs(w_q + w_c - 1.0) > 1e-12) {
      throw ConfigError("preference (" + std::to_string(w_q) + ", " + std::to_string(w_c) +
                        ") is not on the 1-simplex");
    }
  }

  static PreferenceVector from_score_weight(double w_q) {
    if (!(w_q >= 0.0 && w_q <= 1.0)) throw ConfigError("score weight outside [0, 1]");
    return PreferenceVector(w_q, 1.0 - w_q);
  }

  static PreferenceVector from_cost_weight(double w_c) {
    if (!(w_c >= 0.0 && w_c <= 1.0)) throw ConfigError("cost weight outside [0, 1]");
    PreferenceVector p;
    p.w_c_ = w_c;
    p.w_q_ = 1.0 - w_c;
    return p;
  }

  static PreferenceVector balanced() { return PreferenceVector(0.5, 0.5); }

  double w_q() const { return w_q_; }
  double w_c() const { return w_c_; }

  bool operator==(const PreferenceVector&) const = default;

 private:
  double w_q_ = 0.5;
  double w_c_ = 0.5;
};

/// Draws u ~ U[0,1) and returns (u, 1 - u): uniform on the 1-simplex.
inline PreferenceVector sample_simplex_preference(SeededRng& rng) {
  return PreferenceVector::from_score_weight(rng.uniform());
}

struct ArmDescriptor {
  std::string id;
  std::string name;

  bool operator==(const ArmDescriptor&) const = default;
};

/// Ordered candidate arms; the position of an arm is its action index.
class ArmSet {
 public:
  ArmSet() = default;

  explicit ArmSet(std::vector<ArmDescriptor> arms) : arms_(std::move(arms)) {
    if (arms_.size() < 2) throw DataError("an arm set needs at least two arms");
    std::unordered_set<std::string> seen;
    for (const auto& arm : arms_) {
      if (arm.id.empty()) throw DataError("arm with empty id");
      if (!seen.insert(arm.id).second) throw DataError("duplicate arm id '" + arm.id + "'");
    }
  }

  std::size_t size() const { return arms_.size(); }
  const ArmDescriptor& operator[](std::size_t i) const { return arms_.at(i); }
  const std::vector<ArmDescriptor>& arms() const { return arms_; }

  bool operator==(const ArmSet&) const = default;

 private:
  std::vector<ArmDescriptor> arms_;
};

/// Observed result of routing one prompt to one arm: score in [0,1], cost in USD.
struct Outcome {
  double score = 0.0;
  double cost = 0.0;

  bool operator==(const Outcome&) const = default;
};

inline void validate(const Outcome& o) {
  if (!std::isfinite(o.score) || !std::isfinite(o.cost)) throw DataError("non-finite outcome");
  if (o.score < 0.0 || o.score > 1.0) throw DataError("score outside [0, 1]");
  if (o.cost < 0.0) throw DataError("negative cost");
}

/// Cost cap tau (USD).
class RewardSpec {
 public:
  explicit RewardSpec(double tau = 1.0) : tau_(tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("cost cap tau must be positive");
  }
  double tau() const { return tau_; }

  bool operator==(const RewardSpec&) const = default;

 private:
  double tau_;
};

/// Cost cap from a quantile of observed costs. A zero quantile (all costs
/// zero) falls back to tau = 1 since any positive cap yields zero penalty.
inline RewardSpec reward_spec_from_costs(const std::vector<double>& costs, double q = 0.95) {
  const double tau = quantile(costs, q);
  return RewardSpec(tau > 0.0 ? tau : 1.0);
}

/// min(c / tau, 1).
inline double normalize_cost(double cost, const RewardSpec& spec) {
  if (!(cost >= 0.0)) throw DataError("normalize_cost: negative or NaN cost");
  return std::min(cost / spec.tau(), 1.0);
}

/// r = w_q * q - w_c * min(c / tau, 1); always in [-1, 1].
inline double compute_reward(const PreferenceVector& w, const Outcome& outcome,
                             const RewardSpec& spec) {
  return w.w_q() * outcome.score - w.w_c() * normalize_cost(outcome.cost, spec);
}

/// What the policy observes before acting.
struct Context {
  Vector embedding;
  PreferenceVector preference;
  std::string prompt_id;
  std::string task_id;
};

}  // namespace prefroute
