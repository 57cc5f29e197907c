#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowmm/market.hpp"
#include "flowmm/rng.hpp"

namespace flowmm {

/// Agent-visible state at one step.
struct Observation {
  std::size_t step = 0;
  double cash = 0.0;
  int inventory = 0;
  double mid = 0.0;
  double prev_quoted_spread = 0.0;  ///< delta_bid + delta_ask of the previous step

  bool operator==(const Observation&) const = default;
};

/// Quote offsets from the mid-price.
struct QuoteAction {
  double delta_bid = 0.0;
  double delta_ask = 0.0;

  bool operator==(const QuoteAction&) const = default;
};

using ActionSequence = std::vector<QuoteAction>;

struct EnvConfig {
  int q_max = 10;
  double inv_penalty = 0.0;       ///< per-step reward penalty on q^2 (scaled by dt)
  double terminal_penalty = 0.0;  ///< phi(q_T) = terminal_penalty * q_T^2
  double initial_cash = 1000.0;

  void validate() const;
};

inline constexpr std::size_t kWindowFeatures = 5;
inline constexpr std::size_t kActionDim = 2;

/// Fixed-length trailing history of observations, front-padded with the first
/// observation of the episode.
class ObservationWindow {
 public:
  ObservationWindow(std::size_t length, std::size_t n_steps);

  /// Appends an observation; the first push fills every slot.
  void push(const Observation& obs);

  std::size_t length() const { return length_; }
  std::size_t n_steps() const { return n_steps_; }
  const Observation& latest() const;
  std::span<const Observation> entries() const { return entries_; }

  /// Flat row-major feature vector, oldest first: for each entry
  /// (step / n_steps, cash, inventory, mid, prev_quoted_spread).
  std::vector<double> features() const;

 private:
  std::size_t length_;
  std::size_t n_steps_;
  std::vector<Observation> entries_;
};

std::array<double, kWindowFeatures> observation_features(const Observation& obs, std::size_t n_steps);

/// Anything that can quote. `plan` returns a non-empty action sequence whose
/// first entry is executed (receding horizon).
class Policy {
 public:
  virtual ~Policy() = default;
  virtual ActionSequence plan(const ObservationWindow& window, Rng& rng) const = 0;
  virtual std::size_t window_length() const { return 1; }
  virtual std::string name() const = 0;
};

struct Fills {
  int bid = 0;  ///< our bid was hit: bought one unit
  int ask = 0;  ///< our ask was lifted: sold one unit

  bool operator==(const Fills&) const = default;
};

struct StepOutcome {
  Observation next;
  double reward = 0.0;
  Fills fills;
};

/// Probability a market order fills a resting quote at `offset`: min(1, e^{-k offset}).
double fill_probability(double k, double offset);

/// Executes one step: quotes are posted around obs.mid, each market order in
/// the step may fill the opposite quote, then the mid moves to next_mid. One
/// uniform is drawn from `fill_rng` per order whether or not the quote is live.
StepOutcome step_env(const Observation& obs, const QuoteAction& action,
                     std::span<const MarketOrder> orders, const EnvConfig& env,
                     const MarketParams& params, double next_mid, Rng& fill_rng);

struct EpisodeResult {
  double initial_wealth = 0.0;
  double terminal_wealth = 0.0;
  std::vector<double> value_series;  ///< x_t + q_t S_t, n_steps + 1 entries
  Fills fills;
  int final_inventory = 0;
  double total_reward = 0.0;

  /// Terminal wealth minus initial wealth minus phi(q_T).
  double objective = 0.0;
  double pnl() const { return terminal_wealth - initial_wealth; }

  // Filled in when EpisodeOptions::record_trajectory is set.
  std::vector<Observation> observations;  ///< n_steps + 1
  std::vector<QuoteAction> actions;       ///< n_steps executed quotes

  bool operator==(const EpisodeResult&) const = default;
};

struct EpisodeOptions {
  bool record_trajectory = false;
};

/// Runs `policy` against a pre-sampled market path.
EpisodeResult run_episode_on_path(const MarketPath& path, const MarketParams& params,
                                  const EnvConfig& env, const Policy& policy, Rng& fill_rng,
                                  Rng& policy_rng, const EpisodeOptions& opts = {});

/// Runs one full episode; market, fill and policy streams are derived from
/// `seed`, so two policies run with the same seed face identical markets.
EpisodeResult run_episode(const MarketParams& params, const EnvConfig& env, const Policy& policy,
                          std::uint64_t seed, const EpisodeOptions& opts = {});

}  // namespace flowmm
