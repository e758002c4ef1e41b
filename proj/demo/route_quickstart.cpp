// Trains a small preference-conditioned router on a synthetic two-arm log and
// prints how its routing shifts as the cost weight moves from 0 to 1.

#include <cstdio>
#include <memory>

#include "prefroute/prefroute.hpp"

int main() {
  using namespace prefroute;

  SyntheticSpec spec;
  spec.kind = SyntheticKind::piecewise;
  auto data = std::make_shared<const LoggedDataset>(gen_synthetic(spec, 7));
  BanditEnvironment env(data);

  TrainingConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 7;
  PolicyDims dims;
  dims.embed_dim = data->embed_dim;
  dims.arms = static_cast<int>(data->arm_count());
  PolicyNetwork net = PolicyNetwork::initialized(cfg.head, dims, cfg.seed);
  ReinforceTrainer trainer(net, cfg);
  trainer.run(env, [](const EpochStats& s) {
    if (s.epoch % 5 == 4) std::printf("epoch %3d  mean reward %.4f  entropy %.4f\n", s.epoch + 1, s.mean_reward, s.mean_entropy);
  });

  const auto curve = sweep_preferences(policy_router(net), env, Split::test, default_sweep_grid(),
                                       AccessToken::evaluation());
  std::printf("\n w_c   score%%   cost (USD)\n");
  for (const auto& p : curve) std::printf("%4.1f  %7.2f   %.5f\n", p.w_c, p.score_pct, p.cost_usd);
  return 0;
}
