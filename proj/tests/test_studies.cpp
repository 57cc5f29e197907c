#include <doctest.h>

#include "flowmm/errors.hpp"
#include "flowmm/studies.hpp"

using namespace flowmm;

namespace {

DataConfig tiny_data(std::vector<ExpertKind> pool) {
  DataConfig d;
  d.grid.volatility = {0.1};
  d.grid.arrival = {25.0, 50.0};
  d.grid.hurst = {0.5};
  d.grid.drift = {0.0};
  d.grid.jumps = {{0.0, 0.0, 0.0}};
  d.grid.excitation = {{0.0, 0.0}};
  d.experts.pool = std::move(pool);
  d.experts.n_eval_episodes = 2;
  d.n_episodes = 10;
  d.t_obs = 2;
  d.t_pred = 2;
  return d;
}

ModelConfig tiny_model() {
  ModelConfig m;
  m.hidden = {16, 16};
  m.t_obs = 2;
  m.t_pred = 2;
  m.n_ode_steps = 4;
  return m;
}

TrainConfig tiny_train() {
  TrainConfig t;
  t.max_steps = 10;
  t.batch_size = 32;
  t.seed = 5;
  return t;
}

RegimeConfig two_regimes() {
  RegimeConfig r;
  r.regimes = {{"HL", 0.25, 25.0}, {"LH", 0.02, 50.0}};
  return r;
}

}  // namespace

TEST_CASE("build_dataset: worker count does not change the bytes") {
  const auto d = tiny_data({ExpertKind::kAS, ExpertKind::kGLFT});
  const auto a = build_dataset(d, 21, 1);
  const auto b = build_dataset(d, 21, 3);
  CHECK(encode_dataset(a.dataset) == encode_dataset(b.dataset));
  CHECK(a.chosen == b.chosen);
  CHECK(a.chosen.size() == 2);
  // 2 scenarios x 10 episodes x (100 - t_pred + 1) windows
  CHECK(a.dataset.records.size() == 2 * 10 * 99);
  const auto c = build_dataset(d, 22, 1);
  CHECK(encode_dataset(a.dataset) != encode_dataset(c.dataset));
}

TEST_CASE("build_dataset: empty pool is a config error") {
  CHECK_THROWS_AS(build_dataset(tiny_data({}), 1), ConfigError);
}

TEST_CASE("imitation_mse: an expert scored on its own labels") {
  // GLFT depends only on inventory, so the rebuilt window reproduces each
  // first label exactly; later labels are not planned by a one-step expert.
  const auto d = tiny_data({ExpertKind::kGLFT});
  const auto built = build_dataset(d, 4);
  const ExpertPolicy glft(ExpertKind::kGLFT, d.experts.config_for(build_scenario_grid(d.grid).scenarios[0].params));
  std::vector<StateActionRecord> first;
  for (const auto& r : built.dataset.records)
    if (r.scenario_id == 0) first.push_back(r);
  CHECK(imitation_mse(glft, first, 100, 1) < 1e-20);
  const ExpertPolicy as(ExpertKind::kAS, d.experts.config_for(build_scenario_grid(d.grid).scenarios[0].params));
  CHECK(imitation_mse(as, first, 100, 1) > 1e-6);
  CHECK_THROWS_AS(imitation_mse(glft, std::span<const StateActionRecord>{}, 100, 1), PreconditionError);
}

TEST_CASE("scaling_study: one row per subset, formatted for plotting") {
  const auto rows = scaling_study(tiny_data({}), {{ExpertKind::kAS}, {ExpertKind::kAS, ExpertKind::kGLFT}},
                                  tiny_model(), tiny_train(), two_regimes(), 2, 9);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].experts.size() == 2);
  CHECK(rows[0].per_regime.size() == 2);
  const auto text = format_scaling(rows);
  CHECK(text.rfind("n_experts\texperts\tsharpe\tmdd\tpnl\n", 0) == 0);
  CHECK(text.find("\n2\tas+glft\t") != std::string::npos);
  CHECK_THROWS_AS(scaling_study(tiny_data({}), {}, tiny_model(), tiny_train(), two_regimes(), 2, 9), ConfigError);
}

TEST_CASE("ablation_study: random-label learner is its own baseline") {
  const auto r = ablation_study(tiny_data({}), tiny_model(), tiny_train(), two_regimes(), 2, 9);
  REQUIRE(r.mse.size() == 3);
  CHECK(r.sources == std::vector<std::string>{"random", "as", "glft-drift"});
  CHECK(r.mse[0] == r.random_baseline_mse[0]);
  CHECK(r.table.rows.size() == 6);
  const auto text = format_ablation(r);
  CHECK(text.find("Learning GLFT-Drift Only") != std::string::npos);
  CHECK(text.find("source\tlearned_mse\trandom_policy_mse\n") != std::string::npos);
  auto few = tiny_data({});
  few.n_episodes = 5;
  CHECK_THROWS_AS(ablation_study(few, tiny_model(), tiny_train(), two_regimes(), 2, 9), ConfigError);
}
