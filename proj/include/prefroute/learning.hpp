#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prefroute/domain.hpp"
#include "prefroute/environment.hpp"
#include "prefroute/error.hpp"
#include "prefroute/numerics.hpp"
#include "prefroute/policy.hpp"

namespace prefroute {

struct TrainingConfig {
  int epochs = 100;
  int batch_size = 32;
  double lr = 1e-4;
  double beta = 0.05;  // entropy coefficient
  std::uint64_t seed = 0;
  HeadKind head = HeadKind::mlp;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
    if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  }
};

struct EpochStats {
  int epoch = 0;
  double mean_reward = 0.0;
  double mean_entropy = 0.0;
  double mean_loss = 0.0;
  std::size_t samples = 0;
  std::size_t clamped = 0;        // forward passes that hit the logit clamp
  std::vector<double> baselines;  // one per batch
  double seconds = 0.0;           // wall clock, excluded from equality

  bool operator==(const EpochStats& o) const {
    return epoch == o.epoch && mean_reward == o.mean_reward && mean_entropy == o.mean_entropy &&
           mean_loss == o.mean_loss && samples == o.samples && clamped == o.clamped && baselines == o.baselines;
  }
};

struct TrainingTrace {
  std::vector<EpochStats> epochs;
  bool operator==(const TrainingTrace&) const = default;
};

/// Mean reward of the batch, current sample included.
inline double batch_baseline(std::span<const double> rewards) {
  if (rewards.empty()) throw ConfigError("batch_baseline: empty batch");
  return std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
}

/// One interaction inside a batch.
struct Sample {
  PolicyOutput out;
  std::size_t action = 0;
  double reward = 0.0;
};

/// Mean over the batch of dL_i/dtheta with advantage r_i - b, where b is the
/// batch mean when `use_baseline` is set and zero otherwise.
inline Vector batch_gradient(const PolicyNetwork& net, std::span<const Sample> batch, double beta,
                             bool use_baseline = true) {
  std::vector<double> rewards;
  rewards.reserve(batch.size());
  for (const auto& s : batch) rewards.push_back(s.reward);
  const double b = use_baseline ? batch_baseline(rewards) : 0.0;
  Vector grad = Vector::Zero(net.param_count());
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) net.accumulate_gradient(s.out, s.action, s.reward - b, beta, grad, scale);
  return grad;
}

/// One pass over the shuffled training records: sample a preference and an
/// action per record, observe only that arm, then take one Adam step per
/// batch on the mean gradient. The last partial batch is kept.
inline EpochStats train_epoch(PolicyNetwork& net, BanditFeedback& env, const TrainingConfig& cfg, AdamState& adam,
                              SeededRng& rng, int epoch_index = 0) {
  cfg.validate();
  if (env.embed_dim() != net.dims().embed_dim || static_cast<int>(env.arm_count()) != net.dims().arms) {
    throw DimensionError("environment (d_e " + std::to_string(env.embed_dim()) + ", K " +
                         std::to_string(env.arm_count()) + ") does not match network (d_e " +
                         std::to_string(net.dims().embed_dim) + ", K " + std::to_string(net.dims().arms) + ")");
  }
  const auto started = std::chrono::steady_clock::now();
  std::vector<std::size_t> order = env.training_records();
  if (order.empty()) throw DataError("no training records");
  rng.shuffle(order);

  EpochStats stats;
  stats.epoch = epoch_index;
  const auto& spec = env.reward_spec();
  std::vector<Sample> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  std::vector<double> rewards;
  double reward_sum = 0.0, entropy_sum = 0.0, loss_sum = 0.0;

  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
    batch.clear();
    rewards.clear();
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t record = order[i];
      const PreferenceVector w = sample_simplex_preference(rng);
      Sample s;
      s.out = net.forward(env.embedding(record), w);
      if (s.out.clamped) ++stats.clamped;
      s.action = select_sample(s.out, rng);
      s.reward = compute_reward(w, env.step(record, s.action), spec);
      rewards.push_back(s.reward);
      batch.push_back(std::move(s));
    }
    const double b = batch_baseline(rewards);
    stats.baselines.push_back(b);
    for (const auto& s : batch) {
      const double h = entropy(s.out);
      const double loss = sample_loss(s.out, s.action, s.reward - b, cfg.beta);
      if (!std::isfinite(loss) || !std::isfinite(s.reward)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch_index) + ", batch starting at " +
                             std::to_string(start) + " (reward " + std::to_string(s.reward) + ", loss " +
                             std::to_string(loss) + ")");
      }
      reward_sum += s.reward;
      entropy_sum += h;
      loss_sum += loss;
    }
    net.set_params(adam_step(net.params(), batch_gradient(net, batch, cfg.beta), adam));
  }
  const auto n = static_cast<double>(order.size());
  stats.samples = order.size();
  stats.mean_reward = reward_sum / n;
  stats.mean_entropy = entropy_sum / n;
  stats.mean_loss = loss_sum / n;
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return stats;
}

/// Owns the optimizer state and the run's random stream.
class ReinforceTrainer {
 public:
  // The training stream is seeded with splitmix64(seed) so it differs from
  // the initialization stream seeded with `seed` itself.
  ReinforceTrainer(PolicyNetwork& net, TrainingConfig cfg)
      : net_(net), cfg_(cfg), adam_(net.param_count(), AdamHyper{cfg.lr}), rng_(splitmix64(cfg.seed)) {
    cfg_.validate();
  }

  // Training code only ever holds this token; it cannot read full outcome rows.
  static AccessToken access_token() { return AccessToken::training(); }

  EpochStats step_epoch(BanditFeedback& env) {
    auto stats = train_epoch(net_, env, cfg_, adam_, rng_, epochs_done_);
    ++epochs_done_;
    return stats;
  }

  TrainingTrace run(BanditFeedback& env, const std::function<void(const EpochStats&)>& on_epoch = {}) {
    TrainingTrace trace;
    for (int e = 0; e < cfg_.epochs; ++e) {
      trace.epochs.push_back(step_epoch(env));
      if (on_epoch) on_epoch(trace.epochs.back());
    }
    return trace;
  }

  const AdamState& adam() const { return adam_; }
  int epochs_done() const { return epochs_done_; }

 private:
  PolicyNetwork& net_;
  TrainingConfig cfg_;
  AdamState adam_;
  SeededRng rng_;
  int epochs_done_ = 0;
};

/// Exact per-record expectation  sum_a pi(a|s) r(a, s)  averaged over the
/// split, using full-information rows (evaluation capability required).
inline double expected_reward(const PolicyNetwork& net, const BanditEnvironment& env, Split split,
                              const PreferenceVector& w, const AccessToken& token) {
  const auto records = env.indices(split);
  if (records.empty()) throw DataError("expected_reward: split '" + std::string(to_string(split)) + "' is empty");
  double total = 0.0;
  for (const std::size_t i : records) {
    const auto& row = env.full_outcomes(i, token);
    const auto out = net.forward(env.embedding(i), w);
    for (std::size_t a = 0; a < row.size(); ++a) {
      total += out.probs[static_cast<Eigen::Index>(a)] * compute_reward(w, row[a], env.reward_spec());
    }
  }
  return total / static_cast<double>(records.size());
}

// ---------------------------------------------------------------------------
// JSON-lines trace: one object per epoch. Wall-clock time is written only
// when requested so that traces of identical runs compare byte for byte.

inline nlohmann::json epoch_to_json(const EpochStats& s, bool with_timing = false) {
  nlohmann::json j{{"epoch", s.epoch},       {"mean_reward", s.mean_reward}, {"mean_entropy", s.mean_entropy},
                   {"mean_loss", s.mean_loss}, {"samples", s.samples},         {"clamped", s.clamped},
                   {"baselines", s.baselines}};
  if (with_timing) j["seconds"] = s.seconds;
  return j;
}

inline std::string trace_to_jsonl(const TrainingTrace& trace, bool with_timing = false) {
  std::string out;
  for (const auto& e : trace.epochs) {
    out += epoch_to_json(e, with_timing).dump();
    out += '\n';
  }
  return out;
}

}  // namespace prefroute
