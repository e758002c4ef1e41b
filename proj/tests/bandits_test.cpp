#include <gtest/gtest.h>

#include <cmath>

#include "prefroute/bandits.hpp"
#include "support.hpp"

using namespace prefroute;
using namespace prefroute::testing;

namespace {

AgentConfig config(AgentKind kind) {
  AgentConfig c;
  c.kind = kind;
  return c;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(Agent, FreshLinUcbTiesToFirstArm) {
  LinearBanditAgent agent(config(AgentKind::linucb), 3, 4);
  SeededRng rng(1);
  EXPECT_EQ(agent.select(vec({0.2, -0.1, 0.5, 0.5}), rng), 0u);
  EXPECT_EQ(agent.select_greedy(vec({0.2, -0.1, 0.5, 0.5})), 0u);
}

TEST(Agent, OneDimensionalUcbArithmetic) {
  AgentConfig c = config(AgentKind::linucb);
  c.alpha = 2.0;
  LinearBanditAgent agent(c, 2, 1);
  agent.update(vec({1.0}), 0, 1.0);
  // A = 2, b = 1: theta = 0.5, width = sqrt(1/2)
  EXPECT_NEAR(agent.theta(0)[0], 0.5, 1e-15);
  EXPECT_NEAR(agent.ucb_score(0, vec({1.0})), 0.5 + 2.0 * std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(agent.ucb_score(1, vec({1.0})), 2.0, 1e-15);
}

TEST(Agent, EpsilonZeroIsGreedy) {
  AgentConfig c = config(AgentKind::egreedy);
  c.epsilon = 0.0;
  LinearBanditAgent agent(c, 3, 2);
  agent.update(vec({1.0, 0.0}), 2, 1.0);
  SeededRng rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(agent.select(vec({1.0, 0.2}), rng), 2u);
}

TEST(Agent, EpsilonOneExploresUniformly) {
  AgentConfig c = config(AgentKind::egreedy);
  c.epsilon = 1.0;
  LinearBanditAgent agent(c, 4, 2);
  agent.update(vec({1.0, 0.0}), 2, 1.0);
  SeededRng rng(3);
  std::vector<int> counts(4);
  for (int i = 0; i < 40000; ++i) ++counts[agent.select(vec({1.0, 0.2}), rng)];
  for (int k : counts) EXPECT_NEAR(k / 40000.0, 0.25, 0.01);
}

TEST(Agent, UpdatesAreDisjointPerArm) {
  LinearBanditAgent agent(config(AgentKind::linucb), 3, 2);
  const auto before = agent.arm(1);
  agent.update(vec({0.3, 0.4}), 0, 0.7);
  agent.update(vec({-0.3, 0.1}), 2, 0.1);
  EXPECT_EQ(agent.arm(1), before);
  EXPECT_EQ(agent.arm(0).pulls, 1u);
}

TEST(Agent, UpdateOrderDoesNotMatter) {
  LinearBanditAgent a(config(AgentKind::linucb), 2, 3), b(config(AgentKind::linucb), 2, 3);
  const Vector z1 = vec({0.1, 0.9, -0.4}), z2 = vec({0.7, -0.2, 0.3});
  a.update(z1, 0, 0.5);
  a.update(z2, 0, -0.25);
  b.update(z2, 0, -0.25);
  b.update(z1, 0, 0.5);
  EXPECT_TRUE(a.arm(0).gram.isApprox(b.arm(0).gram, 1e-15));
  EXPECT_TRUE(a.theta(0).isApprox(b.theta(0), 1e-13));
}

TEST(Agent, RidgeClosedFormTwoDimensions) {
  AgentConfig c = config(AgentKind::linucb);
  c.lambda = 0.5;
  LinearBanditAgent agent(c, 2, 2);
  const double zs[5][2] = {{1.0, 0.0}, {0.5, 0.5}, {-0.2, 1.0}, {0.3, -0.7}, {0.9, 0.4}};
  const double rs[5] = {0.8, 0.1, -0.3, 0.45, 0.6};
  double a11 = 0.5, a12 = 0.0, a22 = 0.5, b1 = 0.0, b2 = 0.0;
  for (int i = 0; i < 5; ++i) {
    agent.update(vec({zs[i][0], zs[i][1]}), 1, rs[i]);
    a11 += zs[i][0] * zs[i][0];
    a12 += zs[i][0] * zs[i][1];
    a22 += zs[i][1] * zs[i][1];
    b1 += rs[i] * zs[i][0];
    b2 += rs[i] * zs[i][1];
  }
  // explicit 2x2 inverse
  const double det = a11 * a22 - a12 * a12;
  const double t1 = (a22 * b1 - a12 * b2) / det;
  const double t2 = (a11 * b2 - a12 * b1) / det;
  EXPECT_NEAR(agent.theta(1)[0], t1, 1e-8);
  EXPECT_NEAR(agent.theta(1)[1], t2, 1e-8);
}

TEST(Agent, ShermanMorrisonAgreesWithRefactor) {
  AgentConfig c = config(AgentKind::linucb);
  c.refactor_every = 4;
  LinearBanditAgent agent(c, 2, 5);
  SeededRng rng(8);
  for (int i = 0; i < 10; ++i) {
    Vector z(5);
    for (int j = 0; j < 5; ++j) z[j] = rng.normal();
    agent.update(z, 0, rng.uniform());
  }
  const auto& s = agent.arm(0);
  EXPECT_EQ(s.since_refactor, 2);
  EXPECT_TRUE((s.gram * s.inverse).isApprox(Matrix::Identity(5, 5), 1e-10));
  EXPECT_TRUE(s.inverse.isApprox(spd_inverse(s.gram), 1e-10));
}

TEST(Agent, ThompsonWithZeroScaleIsGreedy) {
  AgentConfig c = config(AgentKind::lints);
  c.nu = 0.0;
  LinearBanditAgent agent(c, 3, 2);
  agent.update(vec({1.0, 0.0}), 1, 0.9);
  agent.update(vec({0.0, 1.0}), 2, 0.9);
  SeededRng rng(4);
  for (const Vector& z : {vec({1.0, 0.1}), vec({0.1, 1.0}), vec({-1.0, -1.0})}) {
    EXPECT_EQ(agent.select(z, rng), agent.select_greedy(z));
  }
}

TEST(Agent, ThompsonSampleCovariance) {
  // theta ~ N(theta_hat, nu^2 A^{-1}): check the empirical covariance
  AgentConfig c = config(AgentKind::lints);
  c.nu = 0.7;
  LinearBanditAgent agent(c, 2, 2);
  agent.update(vec({1.0, 0.5}), 0, 1.0);
  agent.update(vec({-0.3, 1.0}), 0, 0.2);
  SeededRng rng(10);
  const int n = 200000;
  Matrix cov = Matrix::Zero(2, 2);
  const Vector mean = agent.theta(0);
  for (int i = 0; i < n; ++i) {
    const Vector d = agent.sample_theta(0, rng) - mean;
    cov += d * d.transpose();
  }
  cov /= n;
  const Matrix expect = 0.49 * spd_inverse(agent.arm(0).gram);
  EXPECT_LE((cov - expect).cwiseAbs().maxCoeff(), 0.01);
}

TEST(Agent, RejectsBadInput) {
  LinearBanditAgent agent(config(AgentKind::linucb), 2, 3);
  EXPECT_THROW(agent.update(vec({1.0, 2.0}), 0, 1.0), DimensionError);
  EXPECT_THROW(agent.update(vec({1.0, 2.0, 3.0}), 2, 1.0), DimensionError);
  EXPECT_THROW(agent.update(vec({1.0, 2.0, 3.0}), 0, std::nan("")), NumericalError);
  AgentConfig bad = config(AgentKind::egreedy);
  bad.epsilon = 2.0;
  EXPECT_THROW(LinearBanditAgent(bad, 2, 3), ConfigError);
  EXPECT_THROW(parse_agent_kind("ucb1"), ConfigError);
}

TEST(Agent, SerializationRoundTrip) {
  for (auto kind : {AgentKind::linucb, AgentKind::lints, AgentKind::egreedy}) {
    AgentConfig c = config(kind);
    c.alpha = 0.3;
    c.refactor_every = 7;
    LinearBanditAgent agent(c, 3, 4);
    SeededRng rng(2);
    for (int i = 0; i < 20; ++i) {
      Vector z(4);
      for (int j = 0; j < 4; ++j) z[j] = rng.normal();
      agent.update(z, rng.uniform_index(3), rng.uniform());
    }
    const auto text = agent_to_json(agent, 5, {{"k", 1}}).dump();
    const auto back = agent_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(back, agent);
    EXPECT_EQ(agent_to_json(back, 5, {{"k", 1}}).dump(), text);
  }
}

TEST(Agent, TrainingOnEnvironmentIsDeterministic) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::linear;
  spec.arms = 3;
  spec.records = 300;
  auto ds = shared(gen_synthetic(spec, 3));
  BanditEnvironment env(ds);
  LinearBanditAgent a(config(AgentKind::lints), 3, spec.embed_dim + 2), b = a;
  EXPECT_EQ(train_agent(a, env, 2, 9), train_agent(b, env, 2, 9));
  EXPECT_EQ(a, b);
  EXPECT_EQ(env.steps_taken(), 2u * 2u * ds->indices(Split::train).size());
}
