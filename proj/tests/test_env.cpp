#include <doctest.h>

#include <cmath>

#include "flowmm/env.hpp"
#include "flowmm/errors.hpp"
#include "flowmm/experts.hpp"

using namespace flowmm;

namespace {

class ConstantPolicy final : public Policy {
 public:
  explicit ConstantPolicy(QuoteAction a) : a_(a) {}
  ActionSequence plan(const ObservationWindow&, Rng&) const override { return {a_}; }
  std::string name() const override { return "const"; }

 private:
  QuoteAction a_;
};

MarketPath flat_path(std::size_t n, double s, std::vector<std::vector<MarketOrder>> orders) {
  MarketPath p;
  p.mid.assign(n + 1, s);
  p.orders = std::move(orders);
  p.orders.resize(n);
  return p;
}

}  // namespace

TEST_CASE("window: front padding and order") {
  ObservationWindow w(3, 100);
  Observation a{0, 1000, 0, 100, 0};
  w.push(a);
  REQUIRE(w.entries().size() == 3);
  for (const auto& e : w.entries()) CHECK(e == a);
  Observation b{1, 990, 1, 101, 0.5};
  w.push(b);
  CHECK(w.entries()[0] == a);
  CHECK(w.entries()[2] == b);
  CHECK(w.latest() == b);
  const auto f = w.features();
  REQUIRE(f.size() == 15);
  CHECK(f[10] == 0.01);
  CHECK(f[11] == 990);
  CHECK(f[12] == 1);
  CHECK(f[13] == 101);
  CHECK(f[14] == 0.5);
}

TEST_CASE("fill probability") {
  CHECK(fill_probability(1.5, 0.0) == 1.0);
  CHECK(fill_probability(1.5, 1.0) == doctest::Approx(0.22313).epsilon(1e-5));
  double prev = 2.0;
  for (double d = 0.0; d < 5.0; d += 0.25) {
    const double p = fill_probability(1.5, d);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("step_env: zero offset fills with certainty") {
  MarketParams p;
  EnvConfig env;
  Rng rng(1);
  const Observation obs{0, 1000, 0, 100, 0};
  const MarketOrder sell[] = {{0.001, Side::kSell}};
  const auto s = step_env(obs, {0.0, 1.0}, sell, env, p, 100.0, rng);
  CHECK(s.fills.bid == 1);
  CHECK(s.next.inventory == 1);
  CHECK(s.next.cash == 900.0);
  CHECK(s.next.prev_quoted_spread == 1.0);
  CHECK(s.next.step == 1);
}

TEST_CASE("step_env: capped side is withdrawn") {
  MarketParams p;
  EnvConfig env;
  Rng rng(1);
  const Observation obs{0, 1000, env.q_max, 100, 0};
  const MarketOrder sells[] = {{0.001, Side::kSell}, {0.002, Side::kSell}};
  const auto s = step_env(obs, {0.0, 0.0}, sells, env, p, 100.0, rng);
  CHECK(s.fills.bid == 0);
  CHECK(s.next.inventory == env.q_max);
}

TEST_CASE("step_env: negative offsets and inventory beyond the cap are rejected") {
  MarketParams p;
  EnvConfig env;
  Rng rng(1);
  CHECK_THROWS_AS(step_env({0, 1000, 0, 100, 0}, {-0.1, 0.1}, {}, env, p, 100.0, rng), PreconditionError);
  CHECK_THROWS_AS(step_env({0, 1000, 11, 100, 0}, {0.1, 0.1}, {}, env, p, 100.0, rng), PreconditionError);
}

TEST_CASE("step_env: empirical fill rate at k=1.5, delta=1") {
  MarketParams p;
  EnvConfig env;
  Rng rng(2024);
  const int n = 100000;
  int fills = 0;
  const MarketOrder buy[] = {{0.001, Side::kBuy}};
  for (int i = 0; i < n; ++i) fills += step_env({0, 1000, 0, 100, 0}, {1.0, 1.0}, buy, env, p, 100.0, rng).fills.ask;
  const double pr = std::exp(-1.5);
  const double se = std::sqrt(pr * (1 - pr) / n);
  CHECK(std::abs(fills / double(n) - pr) < 3 * se);
}

TEST_CASE("step_env: reward is the wealth change minus the inventory penalty") {
  MarketParams p;
  EnvConfig env;
  env.inv_penalty = 2.0;
  Rng rng(1);
  const MarketOrder sell[] = {{0.001, Side::kSell}};
  const auto s = step_env({0, 1000, 0, 100, 0}, {0.0, 1.0}, sell, env, p, 101.0, rng);
  // bought at 100, marked at 101; penalty 2 * 1^2 * 0.01
  CHECK(s.reward == doctest::Approx(1.0 - 0.02).epsilon(1e-14));
}

TEST_CASE("episode: huge offsets mean no fills and a constant value series") {
  MarketParams p;
  EnvConfig env;
  const ConstantPolicy far({1e6, 1e6});
  const auto r = run_episode(p, env, far, 5);
  CHECK(r.fills.bid == 0);
  CHECK(r.fills.ask == 0);
  CHECK(r.terminal_wealth == env.initial_cash);
  REQUIRE(r.value_series.size() == p.n_steps + 1);
  for (double v : r.value_series) CHECK(v == env.initial_cash);
}

TEST_CASE("episode: one forced ask fill at offset d") {
  MarketParams p;
  p.n_steps = 1;
  p.sigma = 0.0;
  p.fill_decay = 1e-300;  // e^{-k d} rounds to 1
  EnvConfig env;
  const double d = 0.37;
  const auto path = flat_path(1, 100.0, {{{0.005, Side::kBuy}}});
  const ConstantPolicy pol({5.0, d});
  Rng f(1), g(2);
  const auto r = run_episode_on_path(path, p, env, pol, f, g);
  CHECK(r.fills.ask == 1);
  CHECK(r.final_inventory == -1);
  CHECK(r.terminal_wealth == doctest::Approx(env.initial_cash + d).epsilon(1e-14));
  CHECK(r.value_series.back() == r.terminal_wealth);
}

TEST_CASE("episode: inventory never breaches the cap") {
  MarketParams p;
  p.base_sell = 200.0;
  p.base_buy = 1.0;
  EnvConfig env;
  env.q_max = 3;
  const ConstantPolicy tight({0.0, 5.0});
  const auto r = run_episode(p, env, tight, 9, {.record_trajectory = true});
  for (const auto& o : r.observations) CHECK(std::abs(o.inventory) <= env.q_max);
  CHECK(r.final_inventory == env.q_max);
}

TEST_CASE("episode: without fills the value moves only with inventory times mid change") {
  MarketParams p;
  p.sigma = 0.3;
  EnvConfig env;
  const ExpertPolicy pol(ExpertKind::kGLFT, ExpertConfig::from_market(p, 0.1));
  const auto r = run_episode(p, env, pol, 17, {.record_trajectory = true});
  for (std::size_t t = 0; t + 1 < r.observations.size(); ++t) {
    const auto& a = r.observations[t];
    const auto& b = r.observations[t + 1];
    const double dv = r.value_series[t + 1] - r.value_series[t];
    if (a.inventory == b.inventory) {
      CHECK(dv == doctest::Approx(a.inventory * (b.mid - a.mid)).epsilon(1e-9));
    } else {
      // every fill earns its edge: bid fills buy below mid, ask fills sell above
      const double edge = (b.cash - a.cash) + (b.inventory - a.inventory) * a.mid;
      CHECK(dv == doctest::Approx(edge + b.inventory * (b.mid - a.mid)).epsilon(1e-9));
      CHECK(edge >= 0.0);
    }
  }
}

TEST_CASE("episode: terminal penalty enters the objective only") {
  MarketParams p;
  EnvConfig env;
  env.terminal_penalty = 0.5;
  const ExpertPolicy pol(ExpertKind::kAS, ExpertConfig::from_market(p, 0.1));
  const auto r = run_episode(p, env, pol, 4);
  CHECK(r.objective == doctest::Approx(r.pnl() - 0.5 * r.final_inventory * r.final_inventory));
}

TEST_CASE("episode: same seed is bit-identical") {
  MarketParams p;
  p.hurst = 0.7;
  EnvConfig env;
  const ExpertPolicy pol(ExpertKind::kRandom, ExpertConfig::from_market(p, 0.1));
  const auto a = run_episode(p, env, pol, 123, {.record_trajectory = true});
  const auto b = run_episode(p, env, pol, 123, {.record_trajectory = true});
  CHECK(a == b);
  const auto c = run_episode(p, env, pol, 124, {.record_trajectory = true});
  CHECK_FALSE(a == c);
}
