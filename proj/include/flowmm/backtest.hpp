#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowmm/dataset.hpp"
#include "flowmm/env.hpp"

namespace flowmm {

struct EpisodeMetrics {
  double pnl = 0.0;        ///< terminal wealth - initial wealth
  double objective = 0.0;  ///< pnl - phi(q_T)
  double mdd = 0.0;        ///< max drawdown of the value series
  int final_inventory = 0;
  Fills fills;

  bool operator==(const EpisodeMetrics&) const = default;
};

struct MetricSummary {
  double mean_pnl = 0.0;
  double pnl_stderr = 0.0;
  std::optional<double> sharpe;  ///< across episode PnLs; empty when undefined
  double mean_mdd = 0.0;
  double mdd_stderr = 0.0;
  std::size_t episodes = 0;

  bool operator==(const MetricSummary&) const = default;
};

/// Recomputes a summary from per-episode numbers.
MetricSummary summarize(std::span<const EpisodeMetrics> episodes);

struct ScenarioReport {
  std::size_t scenario_id = 0;
  std::string label;
  std::vector<EpisodeMetrics> episodes;
  MetricSummary summary;

  bool operator==(const ScenarioReport&) const = default;
};

struct BacktestReport {
  std::string policy_id;
  std::uint64_t master_seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<ScenarioReport> scenarios;
  MetricSummary aggregate;  ///< over every episode of every scenario

  bool operator==(const BacktestReport&) const = default;
};

struct EvalOptions {
  std::size_t workers = 1;
  std::uint64_t config_hash = 0;
};

/// Runs `policy` for n_episodes per scenario. Episode e of scenario s uses
/// seed episode_seed(seed, s.id, e), shared by every policy evaluated with
/// the same seed. Drawdowns are measured on the value series, which starts at
/// env.initial_cash (must be > 0).
BacktestReport evaluate_policy(const Policy& policy, std::span<const Scenario> scenarios,
                               const EnvConfig& env, std::size_t n_episodes, std::uint64_t seed,
                               const EvalOptions& opts = {});

// ---------------------------------------------------------------------------
// Regime suite

struct Regime {
  std::string name;
  double sigma = 0.0;
  double arrival = 0.0;
};

/// Four volatility / arrival-rate regimes on top of a base market.
struct RegimeConfig {
  std::vector<Regime> regimes{
      {"HH", 0.25, 50.0}, {"HL", 0.25, 25.0}, {"LH", 0.02, 50.0}, {"LL", 0.02, 25.0}};
  double hurst = 0.5;
  double drift = 0.0;
  MarketParams base;
};

std::vector<Scenario> regime_scenarios(const RegimeConfig& cfg);

/// One table row: a single policy for all regimes, or one per regime (for
/// per-regime fine-tuned adjustments).
struct SuiteRow {
  std::string name;
  std::vector<const Policy*> per_regime;
};

struct RegimeTable {
  std::vector<std::string> regimes;
  std::vector<std::string> rows;
  std::vector<std::vector<ScenarioReport>> cells;  ///< [row][regime]
};

RegimeTable regime_suite(std::span<const SuiteRow> rows, const RegimeConfig& cfg, const EnvConfig& env,
                         std::size_t n_episodes, std::uint64_t seed, const EvalOptions& opts = {});

/// Tab-separated table: policy, then PnL/SR/MDD triples per regime.
std::string format_regime_table(const RegimeTable& table);

/// Long-format rows: policy, regime, metric, value, seed, config hash.
std::string format_summary(const RegimeTable& table, std::uint64_t seed, std::uint64_t config_hash);

std::string format_report(const BacktestReport& report);

}  // namespace flowmm
