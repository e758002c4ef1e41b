#pragma once

// Shared helpers for the unit and acceptance suites. The oracles here are
// written against the raw definitions and deliberately avoid the library
// routines they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prefroute/prefroute.hpp"

namespace prefroute::testing {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(PREFROUTE_SOURCE_DIR); }
inline fs::path fixture(const std::string& name) { return source_dir() / "tests" / "fixtures" / name; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("prefroute-" + tag + "-" + std::to_string(rd()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Reward straight from its definition, for cross-checking compute_reward.
inline double reward_oracle(double wq, double wc, double score, double cost, double tau) {
  const double c = cost / tau < 1.0 ? cost / tau : 1.0;
  return wq * score - wc * c;
}

/// Loss for one sample from the probabilities alone:
/// -A log pi_a - beta H(pi).
inline double loss_oracle(const Vector& probs, std::size_t action, double advantage, double beta) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) h -= probs[i] * std::log(probs[i]);
  }
  return -advantage * std::log(probs[static_cast<Eigen::Index>(action)]) - beta * h;
}

struct GradCheck {
  double max_rel_error = 0.0;
  Eigen::Index worst = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central-difference check of backward() over every parameter.
/// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheck finite_difference_check(const PolicyNetwork& net, const Vector& e, const PreferenceVector& w,
                                         std::size_t action, double advantage, double beta, double step = 1e-5,
                                         double floor = 1e-4) {
  const Vector analytic = net.backward(net.forward(e, w), action, advantage, beta);
  PolicyNetwork probe = net;
  Vector p = net.params();
  GradCheck res;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + step;
    probe.set_params(p);
    const double up = loss_oracle(probe.forward(e, w).probs, action, advantage, beta);
    p[i] = orig - step;
    probe.set_params(p);
    const double down = loss_oracle(probe.forward(e, w).probs, action, advantage, beta);
    p[i] = orig;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel > res.max_rel_error) res = {rel, i, analytic[i], numeric};
  }
  return res;
}

/// True when every ReLU pre-activation sits at least `margin` away from the
/// kink, so central differences see a smooth function.
inline bool away_from_kinks(const PolicyOutput& out, double margin) {
  auto ok = [margin](const Vector& v) { return v.size() == 0 || v.cwiseAbs().minCoeff() > margin; };
  return ok(out.pref_pre) && ok(out.head_pre);
}

/// Random network with parameters jittered off the Glorot init so that
/// biases and factors all carry non-trivial values.
inline PolicyNetwork jittered_network(HeadKind kind, const PolicyDims& dims, std::uint64_t seed) {
  PolicyNetwork net = PolicyNetwork::initialized(kind, dims, seed);
  std::mt19937_64 gen(seed * 7919 + 1);
  std::normal_distribution<double> n(0.0, 0.1);
  Vector p = net.params();
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += n(gen);
  net.set_params(p);
  return net;
}

/// Small hand-built dataset: records x arms outcome table, one task.
inline LoggedDataset table_dataset(const std::vector<std::vector<Outcome>>& rows, int embed_dim = 2,
                                   std::uint64_t seed = 0) {
  LoggedDataset ds;
  std::vector<ArmDescriptor> arms;
  for (std::size_t a = 0; a < rows.front().size(); ++a) arms.push_back({"arm" + std::to_string(a), ""});
  ds.arms = ArmSet(arms);
  ds.embed_dim = embed_dim;
  ds.tasks = {"t"};
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    LoggedRecord r;
    r.prompt_id = "p" + std::to_string(i);
    r.task_id = "t";
    r.embedding = Vector(embed_dim);
    for (int k = 0; k < embed_dim; ++k) r.embedding[k] = u(gen);
    r.outcomes = rows[i];
    r.split = Split::train;
    ds.records.push_back(std::move(r));
  }
  return ds;
}

inline std::shared_ptr<const LoggedDataset> shared(LoggedDataset ds) {
  return std::make_shared<const LoggedDataset>(std::move(ds));
}

/// Spy environment: every outcome in its visible table starts out as NaN and
/// only the arm passed to step() gets revealed, so any read of a non-chosen
/// arm would inject NaN into training.
class SpyFeedback : public BanditFeedback {
 public:
  SpyFeedback(const LoggedDataset& truth, RewardSpec spec) : visible(truth.records.size()), truth_(truth), spec_(spec) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < truth.records.size(); ++i) visible[i].assign(truth.arm_count(), Outcome{nan, nan});
  }

  std::size_t arm_count() const override { return truth_.arm_count(); }
  int embed_dim() const override { return truth_.embed_dim; }
  const RewardSpec& reward_spec() const override { return spec_; }
  std::vector<std::size_t> training_records() const override { return truth_.indices(Split::train); }
  const Vector& embedding(std::size_t record) const override { return truth_.records.at(record).embedding; }
  Outcome step(std::size_t record, std::size_t arm) override {
    visible.at(record).at(arm) = truth_.records.at(record).outcomes.at(arm);
    ++steps;
    return visible[record][arm];
  }

  std::size_t poisoned_entries() const {
    std::size_t n = 0;
    for (const auto& row : visible)
      for (const auto& o : row) n += std::isnan(o.score) ? 1 : 0;
    return n;
  }

  std::vector<std::vector<Outcome>> visible;
  std::size_t steps = 0;

 private:
  const LoggedDataset& truth_;
  RewardSpec spec_;
};

}  // namespace prefroute::testing
