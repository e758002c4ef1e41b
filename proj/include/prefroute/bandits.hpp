#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prefroute/domain.hpp"
#include "prefroute/environment.hpp"
#include "prefroute/error.hpp"
#include "prefroute/numerics.hpp"
#include "prefroute/policy.hpp"

namespace prefroute {

enum class AgentKind { linucb, lints, egreedy };

inline std::string_view to_string(AgentKind k) {
  switch (k) {
    case AgentKind::linucb: return "linucb";
    case AgentKind::lints: return "lints";
    case AgentKind::egreedy: return "egreedy";
  }
  return "?";
}

inline AgentKind parse_agent_kind(std::string_view s) {
  if (s == "linucb") return AgentKind::linucb;
  if (s == "lints") return AgentKind::lints;
  if (s == "egreedy" || s == "epsilon-greedy") return AgentKind::egreedy;
  throw ConfigError("unknown agent kind '" + std::string(s) + "' (linucb|lints|egreedy)");
}

struct AgentConfig {
  AgentKind kind = AgentKind::linucb;
  double lambda = 1.0;   // ridge prior, A_a starts at lambda * I
  double alpha = 1.0;    // LinUCB exploration width
  double nu = 0.5;       // LinTS posterior scale
  double epsilon = 0.1;  // epsilon-greedy exploration rate
  int refactor_every = 1000;

  void validate() const {
    if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (!(nu >= 0.0)) throw ConfigError("nu must be >= 0");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    if (refactor_every < 1) throw ConfigError("refactor_every must be >= 1");
  }
};

/// z = [embedding; w_q; w_c]; the preference enters linearly.
inline Vector joint_features(const Vector& embedding, const PreferenceVector& w) {
  Vector z(embedding.size() + 2);
  z << embedding, w.w_q(), w.w_c();
  return z;
}

/// Disjoint per-arm ridge models shared by LinUCB, LinTS and epsilon-greedy.
/// The inverse Gram matrix is maintained with Sherman-Morrison updates and
/// refactorized from A every `refactor_every` updates of that arm.
class LinearBanditAgent {
 public:
  struct ArmState {
    Matrix gram;      // A = lambda I + sum z z^T
    Vector response;  // b = sum r z
    Matrix inverse;   // A^{-1}
    std::uint64_t pulls = 0;
    int since_refactor = 0;

    bool operator==(const ArmState& o) const {
      return gram == o.gram && response == o.response && inverse == o.inverse && pulls == o.pulls &&
             since_refactor == o.since_refactor;
    }
  };

  LinearBanditAgent(AgentConfig cfg, std::size_t arms, int dim) : cfg_(cfg), dim_(dim) {
    cfg_.validate();
    if (arms < 2 || dim < 1) throw ConfigError("agent needs K >= 2 and d >= 1");
    arms_.resize(arms);
    for (auto& a : arms_) {
      a.gram = cfg_.lambda * Matrix::Identity(dim, dim);
      a.response = Vector::Zero(dim);
      a.inverse = (1.0 / cfg_.lambda) * Matrix::Identity(dim, dim);
    }
  }

  const AgentConfig& config() const { return cfg_; }
  std::size_t arm_count() const { return arms_.size(); }
  int dim() const { return dim_; }
  const ArmState& arm(std::size_t a) const { return arms_.at(a); }

  Vector theta(std::size_t a) const { return arms_.at(a).inverse * arms_.at(a).response; }

  double ucb_score(std::size_t a, const Vector& z) const {
    const auto& s = arms_.at(a);
    const double width = std::sqrt(std::max(0.0, z.dot(s.inverse * z)));
    return theta(a).dot(z) + cfg_.alpha * width;
  }

  /// Exploit-only choice, argmax theta_a . z, ties to the lowest index.
  std::size_t select_greedy(const Vector& z) const {
    check_dim(z);
    return argmax([&](std::size_t a) { return theta(a).dot(z); });
  }

  std::size_t select(const Vector& z, SeededRng& rng) const {
    check_dim(z);
    switch (cfg_.kind) {
      case AgentKind::linucb:
        return argmax([&](std::size_t a) { return ucb_score(a, z); });
      case AgentKind::lints: {
        std::vector<double> sampled(arms_.size());
        for (std::size_t a = 0; a < arms_.size(); ++a) sampled[a] = sample_theta(a, rng).dot(z);
        return argmax([&](std::size_t a) { return sampled[a]; });
      }
      case AgentKind::egreedy:
        if (rng.uniform() < cfg_.epsilon) return rng.uniform_index(arms_.size());
        return select_greedy(z);
    }
    return 0;
  }

  /// theta ~ N(theta_hat, nu^2 A^{-1}), drawn as theta_hat + nu L^{-T} xi with A = L L^T.
  Vector sample_theta(std::size_t a, SeededRng& rng) const {
    const auto& s = arms_.at(a);
    Vector xi(dim_);
    for (int j = 0; j < dim_; ++j) xi[j] = rng.normal();
    const Vector mean = theta(a);
    if (cfg_.nu == 0.0) return mean;
    Eigen::LLT<Matrix> llt(s.gram);
    if (llt.info() != Eigen::Success) throw NumericalError("LinTS: Gram matrix lost positive definiteness");
    return mean + cfg_.nu * llt.matrixU().solve(xi);
  }

  void update(const Vector& z, std::size_t arm, double reward) {
    check_dim(z);
    if (arm >= arms_.size()) throw DimensionError("arm " + std::to_string(arm) + " out of range");
    if (!std::isfinite(reward)) throw NumericalError("agent update with non-finite reward");
    require_finite(z, "agent features");
    auto& s = arms_[arm];
    s.gram.noalias() += z * z.transpose();
    s.response += reward * z;
    ++s.pulls;
    if (++s.since_refactor >= cfg_.refactor_every) {
      s.inverse = spd_inverse(s.gram);
      s.since_refactor = 0;
    } else {
      const Vector az = s.inverse * z;
      s.inverse.noalias() -= (az * az.transpose()) / (1.0 + z.dot(az));
    }
  }

  void restore_arm(std::size_t a, ArmState s) {
    if (s.gram.rows() != dim_ || s.gram.cols() != dim_ || s.inverse.rows() != dim_ || s.inverse.cols() != dim_ ||
        s.response.size() != dim_) {
      throw DimensionError("restored arm state has wrong dimensions");
    }
    require_finite(s.gram, "restored Gram matrix");
    require_finite(s.inverse, "restored inverse");
    require_finite(s.response, "restored response");
    arms_.at(a) = std::move(s);
  }

  bool operator==(const LinearBanditAgent& o) const {
    return cfg_.kind == o.cfg_.kind && cfg_.lambda == o.cfg_.lambda && cfg_.alpha == o.cfg_.alpha &&
           cfg_.nu == o.cfg_.nu && cfg_.epsilon == o.cfg_.epsilon && cfg_.refactor_every == o.cfg_.refactor_every &&
           dim_ == o.dim_ && arms_ == o.arms_;
  }

 private:
  void check_dim(const Vector& z) const {
    if (z.size() != dim_) {
      throw DimensionError("feature vector has " + std::to_string(z.size()) + " entries, agent expects " +
                           std::to_string(dim_));
    }
  }

  template <typename Score>
  std::size_t argmax(Score score) const {
    std::size_t best = 0;
    double best_value = score(0);
    for (std::size_t a = 1; a < arms_.size(); ++a) {
      const double v = score(a);
      if (v > best_value) {
        best = a;
        best_value = v;
      }
    }
    return best;
  }

  AgentConfig cfg_;
  int dim_;
  std::vector<ArmState> arms_;
};

struct AgentEpochStats {
  int epoch = 0;
  double mean_reward = 0.0;
  std::size_t samples = 0;
  bool operator==(const AgentEpochStats&) const = default;
};

/// Online pass over the shuffled training records under the same
/// simplex-sampled preference stream the policy trainer uses.
inline AgentEpochStats agent_train_epoch(LinearBanditAgent& agent, BanditFeedback& env, SeededRng& rng,
                                         int epoch_index = 0) {
  if (agent.dim() != env.embed_dim() + 2 || agent.arm_count() != env.arm_count()) {
    throw DimensionError("agent dimensions do not match environment");
  }
  auto order = env.training_records();
  if (order.empty()) throw DataError("no training records");
  rng.shuffle(order);
  double total = 0.0;
  for (const std::size_t record : order) {
    const PreferenceVector w = sample_simplex_preference(rng);
    const Vector z = joint_features(env.embedding(record), w);
    const std::size_t a = agent.select(z, rng);
    const double r = compute_reward(w, env.step(record, a), env.reward_spec());
    agent.update(z, a, r);
    total += r;
  }
  return {epoch_index, total / static_cast<double>(order.size()), order.size()};
}

inline std::vector<AgentEpochStats> train_agent(LinearBanditAgent& agent, BanditFeedback& env, int epochs,
                                                std::uint64_t seed) {
  SeededRng rng(splitmix64(seed));
  std::vector<AgentEpochStats> out;
  for (int e = 0; e < epochs; ++e) out.push_back(agent_train_epoch(agent, env, rng, e));
  return out;
}

// ---------------------------------------------------------------------------
// Serialization in the shared checkpoint envelope.

namespace detail {

inline std::vector<double> flatten_rows(const Matrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

inline Matrix unflatten_rows(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(v.size()) != rows * cols) throw DataError("matrix payload has wrong size");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  return m;
}

}  // namespace detail

inline nlohmann::json agent_to_json(const LinearBanditAgent& agent, std::uint64_t seed = 0,
                                    const nlohmann::json& meta = nlohmann::json::object()) {
  const auto& c = agent.config();
  nlohmann::json arms = nlohmann::json::array();
  for (std::size_t a = 0; a < agent.arm_count(); ++a) {
    const auto& s = agent.arm(a);
    arms.push_back({{"gram", detail::flatten_rows(s.gram)},
                    {"response", std::vector<double>(s.response.data(), s.response.data() + s.response.size())},
                    {"inverse", detail::flatten_rows(s.inverse)},
                    {"pulls", s.pulls},
                    {"since_refactor", s.since_refactor}});
  }
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"kind", "agent"},
          {"agent_kind", to_string(c.kind)},
          {"config",
           {{"lambda", c.lambda},
            {"alpha", c.alpha},
            {"nu", c.nu},
            {"epsilon", c.epsilon},
            {"refactor_every", c.refactor_every}}},
          {"dim", agent.dim()},
          {"arms", arms},
          {"seed", seed},
          {"meta", meta}};
}

inline LinearBanditAgent agent_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat || j.at("kind").get<std::string>() != "agent") {
      throw DataError("not an agent checkpoint");
    }
    AgentConfig cfg;
    cfg.kind = parse_agent_kind(j.at("agent_kind").get<std::string>());
    const auto& c = j.at("config");
    cfg.lambda = c.at("lambda").get<double>();
    cfg.alpha = c.at("alpha").get<double>();
    cfg.nu = c.at("nu").get<double>();
    cfg.epsilon = c.at("epsilon").get<double>();
    cfg.refactor_every = c.at("refactor_every").get<int>();
    const int dim = j.at("dim").get<int>();
    const auto& arms = j.at("arms");
    LinearBanditAgent agent(cfg, arms.size(), dim);
    for (std::size_t a = 0; a < arms.size(); ++a) {
      const auto& s = arms[a];
      LinearBanditAgent::ArmState st;
      st.gram = detail::unflatten_rows(s.at("gram").get<std::vector<double>>(), dim, dim);
      const auto resp = s.at("response").get<std::vector<double>>();
      if (static_cast<int>(resp.size()) != dim) throw DataError("response vector has wrong size");
      st.response = Eigen::Map<const Vector>(resp.data(), dim);
      st.inverse = detail::unflatten_rows(s.at("inverse").get<std::vector<double>>(), dim, dim);
      st.pulls = s.at("pulls").get<std::uint64_t>();
      st.since_refactor = s.at("since_refactor").get<int>();
      agent.restore_arm(a, std::move(st));
    }
    return agent;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed agent checkpoint: ") + e.what());
  }
}

}  // namespace prefroute
