#include <gtest/gtest.h>

#include <cmath>

#include "prefroute/evaluation.hpp"
#include "support.hpp"

using namespace prefroute;
using namespace prefroute::testing;

namespace {

// One record per task whose arm 0 scores exactly the given fraction.
std::shared_ptr<const LoggedDataset> per_task_dataset(const std::vector<std::pair<std::string, double>>& tasks) {
  LoggedDataset ds = table_dataset({{{0.0, 0.0}, {0.0, 0.0}}});
  ds.records.clear();
  ds.tasks.clear();
  for (const auto& [task, pct] : tasks) {
    for (int copy = 0; copy < 2; ++copy) {
      LoggedRecord r;
      r.prompt_id = task + "-" + std::to_string(copy);
      r.task_id = task;
      r.embedding = Vector::Zero(2);
      r.outcomes = {{pct / 100.0, 0.001}, {0.0, 0.0}};
      r.split = Split::test;
      ds.records.push_back(r);
    }
    ds.tasks.push_back(task);
  }
  return shared(std::move(ds));
}

const AccessToken kEval = AccessToken::evaluation();

}  // namespace

TEST(Tables, InDistributionAverage) {
  auto ds = per_task_dataset(
      {{"arc-c", 96.60}, {"gsm8k", 64.58}, {"mmlu", 81.06}, {"winogrande", 82.61}, {"nq", 43.01}});
  BanditEnvironment env(ds, RewardSpec(1.0));
  const auto f = evaluate(fixed_router(0), env, Split::test, PreferenceVector::balanced(), kEval);
  EXPECT_EQ(format_fixed(f.score_pct), "73.57");
  EXPECT_EQ(f.tasks.size(), 5u);
}

TEST(Tables, OutOfDistributionAverage) {
  auto ds = per_task_dataset({{"mbpp", 68.24}, {"hellaswag", 83.72}, {"hpqa", 46.29}});
  BanditEnvironment env(ds, RewardSpec(1.0));
  const auto f = evaluate(fixed_router(0), env, Split::test, PreferenceVector::balanced(), kEval);
  EXPECT_EQ(format_fixed(f.score_pct), "66.08");
}

TEST(Tables, EightTaskAverageAndRelativeChange) {
  EXPECT_EQ(format_fixed(average({96.60, 64.58, 81.06, 82.61, 43.01, 68.24, 83.72, 46.29})), "70.76");
  EXPECT_EQ(format_fixed(average({96.19, 65.88, 81.19, 81.93, 29.15, 68.62, 83.96, 40.93})), "68.48");
  const auto c = compare(60.56, 0.94, 70.76, 0.47);
  EXPECT_EQ(format_fixed(c.score_improvement_pct), "16.84");
  EXPECT_EQ(format_fixed(c.cost_reduction_pct), "50.00");
  // remaining consistent cells of the same summary
  EXPECT_EQ(format_fixed(compare(60.56, 0.94, 32.52, 0.05).score_improvement_pct), "-46.30");
  EXPECT_EQ(format_fixed(compare(60.56, 0.94, 68.48, 3.29).score_improvement_pct), "13.08");
  EXPECT_EQ(format_fixed(compare(60.56, 0.94, 56.51, 0.79).score_improvement_pct), "-6.69");
  EXPECT_EQ(format_fixed(compare(60.56, 0.94, 32.52, 0.05).cost_reduction_pct), "94.68");
  EXPECT_EQ(format_fixed(compare(60.56, 0.94, 56.51, 0.79).cost_reduction_pct), "15.96");
}

TEST(Evaluate, FixedRouterReducesToArmMeans) {
  auto ds = shared(ingest(fixture("tiny.jsonl")));
  BanditEnvironment env(ds);
  std::vector<std::size_t> all(ds->records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto f = evaluate(fixed_router(2), env, all, PreferenceVector::balanced(), kEval);
  ASSERT_EQ(f.tasks.size(), 2u);
  EXPECT_EQ(f.tasks[0].task, "mmlu");
  EXPECT_NEAR(f.tasks[0].score_pct, 80.0, 1e-12);
  EXPECT_NEAR(f.tasks[0].cost_usd, (0.0020 + 0.0018 + 0.0025 + 0.0016 + 0.0021) / 5, 1e-15);
  EXPECT_NEAR(f.tasks[1].score_pct, (0.9 + 1.0 + 0.8 + 0.6 + 0.9) / 5 * 100, 1e-12);
  EXPECT_NEAR(f.score_pct, (f.tasks[0].score_pct + f.tasks[1].score_pct) / 2, 1e-12);
}

TEST(Evaluate, NeedsCapabilityAndRecords) {
  auto ds = shared(ingest(fixture("tiny.jsonl")));
  BanditEnvironment env(ds);
  EXPECT_THROW(evaluate(fixed_router(0), env, std::vector<std::size_t>{0}, PreferenceVector::balanced(),
                        AccessToken::training()),
               CapabilityError);
  EXPECT_THROW(evaluate(fixed_router(0), env, std::vector<std::size_t>{}, PreferenceVector::balanced(), kEval),
               DataError);
  EXPECT_THROW(evaluate(fixed_router(7), env, std::vector<std::size_t>{0}, PreferenceVector::balanced(), kEval),
               DimensionError);
}

TEST(Sweep, SinglePointEqualsEvaluate) {
  auto ds = shared(gen_synthetic(SyntheticSpec{}, 3));
  BanditEnvironment env(ds);
  const auto router = oracle_router(env, kEval);
  const auto curve = sweep_preferences(router, env, Split::test, {0.4}, kEval);
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_EQ(curve[0], evaluate(router, env, Split::test, PreferenceVector::from_cost_weight(0.4), kEval));
}

TEST(Sweep, SortsGridAndRejectsOutOfRange) {
  auto ds = shared(gen_synthetic(SyntheticSpec{}, 3));
  BanditEnvironment env(ds);
  const auto curve = sweep_preferences(fixed_router(1), env, Split::test, {0.8, 0.0, 0.5}, kEval);
  EXPECT_EQ(curve[0].w_c, 0.0);
  EXPECT_EQ(curve[2].w_c, 0.8);
  EXPECT_THROW(sweep_preferences(fixed_router(1), env, Split::test, {1.2}, kEval), ConfigError);
}

TEST(Sweep, OracleSpendsLessAtHighCostWeight) {
  auto ds = shared(gen_synthetic(SyntheticSpec{}, 3));
  BanditEnvironment env(ds);
  const auto curve = sweep_preferences(oracle_router(env, kEval), env, Split::test, default_sweep_grid(), kEval);
  ASSERT_EQ(curve.size(), 7u);
  EXPECT_LT(curve[5].cost_usd, curve[1].cost_usd);  // w_c 0.8 vs 0.2
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_LE(curve[i].cost_usd, curve[i - 1].cost_usd);
}

TEST(Oracle, UpperBoundsEveryRouter) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::linear;
  spec.arms = 4;
  spec.records = 400;
  auto ds = shared(gen_synthetic(spec, 6));
  BanditEnvironment env(ds);
  PolicyDims d;
  d.embed_dim = spec.embed_dim;
  d.arms = 4;
  const auto net = PolicyNetwork::initialized(HeadKind::mlp, d, 6);
  for (double wc : {0.0, 0.3, 0.7, 1.0}) {
    const auto w = PreferenceVector::from_cost_weight(wc);
    const double best = evaluate(oracle_router(env, kEval), env, Split::test, w, kEval).mean_reward;
    EXPECT_GE(best, evaluate(policy_router(net), env, Split::test, w, kEval).mean_reward);
    for (std::size_t a = 0; a < 4; ++a) EXPECT_GE(best, evaluate(fixed_router(a), env, Split::test, w, kEval).mean_reward);
  }
}

TEST(Compare, IdentityAndZeroReference) {
  const auto same = compare(55.0, 0.3, 55.0, 0.3);
  EXPECT_EQ(same.score_improvement_pct, 0.0);
  EXPECT_EQ(same.cost_reduction_pct, 0.0);
  EXPECT_THROW(compare(0.0, 0.3, 1.0, 0.3), DataError);
  EXPECT_THROW(compare(10.0, 0.0, 1.0, 0.3), DataError);
}

TEST(Compare, RequiresMatchingTasks) {
  const auto ref = report_from_json(nlohmann::json::parse(slurp(fixture("compare_reference.json"))));
  const auto cand = report_from_json(nlohmann::json::parse(slurp(fixture("compare_candidate.json"))));
  const auto other = report_from_json(nlohmann::json::parse(slurp(fixture("compare_other_tasks.json"))));
  EXPECT_EQ(format_fixed(compare(ref, cand).score_improvement_pct), "16.84");
  EXPECT_THROW(compare(ref, other), DataError);
}

TEST(Report, JsonRoundTripAndCsv) {
  auto ds = shared(ingest(fixture("tiny.jsonl")));
  BanditEnvironment env(ds);
  std::vector<std::size_t> all{0, 1, 2, 5, 6};
  EvaluationReport r;
  r.point = evaluate(fixed_router(1), env, all, PreferenceVector::balanced(), kEval);
  r.sweep = sweep_preferences(fixed_router(1), env, all, {0.0, 1.0}, kEval);
  r.meta = {{"seed", 3}};
  EXPECT_EQ(report_from_json(nlohmann::json::parse(report_to_json(r).dump())), r);
  const std::string csv = fragments_to_csv(r.sweep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "task,w_c,score_pct,cost_usd");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_NE(csv.find("gsm8k,1,55.00,0.00115"), std::string::npos) << csv;
  EXPECT_THROW(report_from_json(nlohmann::json{{"point", 1}}), DataError);
}

TEST(Format, FixedRendering) {
  EXPECT_EQ(format_fixed(16.8428), "16.84");
  EXPECT_EQ(format_fixed(50.0), "50.00");
  EXPECT_EQ(format_fixed(-0.001), "0.00");
  EXPECT_EQ(format_full(0.1), "0.1");
}
