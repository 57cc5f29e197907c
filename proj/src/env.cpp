#include "flowmm/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowmm/errors.hpp"

namespace flowmm {

void EnvConfig::validate() const {
  if (q_max < 1) throw ConfigError("EnvConfig: q_max must be >= 1");
  if (!(inv_penalty >= 0.0)) throw ConfigError("EnvConfig: inv_penalty must be >= 0");
  if (!(terminal_penalty >= 0.0)) throw ConfigError("EnvConfig: terminal_penalty must be >= 0");
  if (!std::isfinite(initial_cash)) throw ConfigError("EnvConfig: initial_cash must be finite");
}

ObservationWindow::ObservationWindow(std::size_t length, std::size_t n_steps)
    : length_(length), n_steps_(n_steps) {
  if (length == 0) throw PreconditionError("ObservationWindow: length must be >= 1");
  if (n_steps == 0) throw PreconditionError("ObservationWindow: n_steps must be >= 1");
  entries_.reserve(length);
}

void ObservationWindow::push(const Observation& obs) {
  if (entries_.empty()) {
    entries_.assign(length_, obs);
    return;
  }
  std::rotate(entries_.begin(), entries_.begin() + 1, entries_.end());
  entries_.back() = obs;
}

const Observation& ObservationWindow::latest() const {
  if (entries_.empty()) throw PreconditionError("ObservationWindow: empty");
  return entries_.back();
}

std::array<double, kWindowFeatures> observation_features(const Observation& obs,
                                                         std::size_t n_steps) {
  return {static_cast<double>(obs.step) / static_cast<double>(n_steps), obs.cash,
          static_cast<double>(obs.inventory), obs.mid, obs.prev_quoted_spread};
}

std::vector<double> ObservationWindow::features() const {
  if (entries_.empty()) throw PreconditionError("ObservationWindow: empty");
  std::vector<double> out;
  out.reserve(length_ * kWindowFeatures);
  for (const auto& e : entries_) {
    const auto f = observation_features(e, n_steps_);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

double fill_probability(double k, double offset) { return std::min(1.0, std::exp(-k * offset)); }

StepOutcome step_env(const Observation& obs, const QuoteAction& action,
                     std::span<const MarketOrder> orders, const EnvConfig& env,
                     const MarketParams& params, double next_mid, Rng& fill_rng) {
  if (!(action.delta_bid >= 0.0) || !(action.delta_ask >= 0.0))
    throw PreconditionError("step_env: quote offsets must be >= 0");
  if (std::abs(obs.inventory) > env.q_max)
    throw PreconditionError("step_env: |inventory| exceeds q_max");

  StepOutcome out;
  double cash = obs.cash;
  int q = obs.inventory;
  const double bid = obs.mid - action.delta_bid;
  const double ask = obs.mid + action.delta_ask;
  const double p_bid = fill_probability(params.fill_decay, action.delta_bid);
  const double p_ask = fill_probability(params.fill_decay, action.delta_ask);

  for (const auto& o : orders) {
    const double u = uniform01(fill_rng);
    if (o.side == Side::kSell) {
      // market sell hits our bid; withdrawn at the long cap
      if (q < env.q_max && u < p_bid) {
        cash -= bid;
        ++q;
        ++out.fills.bid;
      }
    } else {
      if (q > -env.q_max && u < p_ask) {
        cash += ask;
        --q;
        ++out.fills.ask;
      }
    }
  }

  const double v0 = obs.cash + obs.inventory * obs.mid;
  const double v1 = cash + q * next_mid;
  out.next = Observation{obs.step + 1, cash, q, next_mid, action.delta_bid + action.delta_ask};
  out.reward = (v1 - v0) - env.inv_penalty * static_cast<double>(q) * q * params.dt;
  return out;
}

EpisodeResult run_episode_on_path(const MarketPath& path, const MarketParams& params,
                                  const EnvConfig& env, const Policy& policy, Rng& fill_rng,
                                  Rng& policy_rng, const EpisodeOptions& opts) {
  env.validate();
  const std::size_t n = params.n_steps;
  if (path.mid.size() != n + 1 || path.orders.size() != n)
    throw PreconditionError("run_episode: market path does not match n_steps");

  EpisodeResult r;
  Observation obs{0, env.initial_cash, 0, path.mid[0], 0.0};
  r.initial_wealth = env.initial_cash;
  r.value_series.reserve(n + 1);
  r.value_series.push_back(obs.cash + obs.inventory * obs.mid);
  if (opts.record_trajectory) {
    r.observations.reserve(n + 1);
    r.actions.reserve(n);
    r.observations.push_back(obs);
  }

  ObservationWindow window(policy.window_length(), n);
  window.push(obs);
  for (std::size_t t = 0; t < n; ++t) {
    const ActionSequence plan = policy.plan(window, policy_rng);
    if (plan.empty()) throw PreconditionError("run_episode: policy returned an empty plan");
    const QuoteAction a = plan.front();
    const StepOutcome s = step_env(obs, a, path.orders[t], env, params, path.mid[t + 1], fill_rng);
    obs = s.next;
    r.fills.bid += s.fills.bid;
    r.fills.ask += s.fills.ask;
    r.total_reward += s.reward;
    r.value_series.push_back(obs.cash + obs.inventory * obs.mid);
    if (opts.record_trajectory) {
      r.actions.push_back(a);
      r.observations.push_back(obs);
    }
    window.push(obs);
  }
  r.terminal_wealth = r.value_series.back();
  r.final_inventory = obs.inventory;
  r.objective = r.terminal_wealth - r.initial_wealth -
                env.terminal_penalty * static_cast<double>(obs.inventory) * obs.inventory;
  return r;
}

EpisodeResult run_episode(const MarketParams& params, const EnvConfig& env, const Policy& policy,
                          std::uint64_t seed, const EpisodeOptions& opts) {
  Rng market = make_stream(seed, Stream::kMarket);
  Rng fills = make_stream(seed, Stream::kFills);
  Rng noise = make_stream(seed, Stream::kPolicy);
  const MarketPath path = simulate_market(params, market);
  return run_episode_on_path(path, params, env, policy, fills, noise, opts);
}

}  // namespace flowmm
