#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "flowmm/backtest.hpp"
#include "flowmm/dataset.hpp"
#include "flowmm/experts.hpp"
#include "flowmm/flow_policy.hpp"

namespace flowmm {

struct ExpertSettings {
  double gamma = 0.1;
  std::vector<ExpertKind> pool{ExpertKind::kAS, ExpertKind::kGLFT, ExpertKind::kGLFTDrift};
  std::size_t n_eval_episodes = 10;
  bool invert_inventory_skew = false;
  double random_lo = 0.0;
  double random_hi = 2.0;

  ExpertConfig config_for(const MarketParams& p) const;
};

struct DataConfig {
  GridConfig grid;
  EnvConfig env;
  ExpertSettings experts;
  std::size_t n_episodes = 20;  ///< per scenario
  std::uint32_t t_obs = 8;
  std::uint32_t t_pred = 4;
};

struct BuiltDataset {
  Dataset dataset;
  std::vector<ExpertKind> chosen;  ///< selected expert per scenario
};

/// Grid -> per-scenario expert selection -> demonstrations. Norm stats come
/// from the training split. Records are ordered by (scenario, episode, step).
BuiltDataset build_dataset(const DataConfig& cfg, std::uint64_t seed, std::size_t workers = 1,
                           std::uint64_t config_hash = 0);

/// Per-coordinate MSE between the policy's planned sequences and the labels
/// of `records`, in action units. Only the newest window_length() entries of
/// each record window are shown to the policy.
double imitation_mse(const Policy& policy, std::span<const StateActionRecord> records,
                     std::size_t n_steps, std::uint64_t seed);

struct ScalingRow {
  std::vector<ExpertKind> experts;
  MetricSummary summary;  ///< aggregate over the evaluation suite
  std::vector<MetricSummary> per_regime;
  std::shared_ptr<const FlowPolicyParams> params;
};

/// Trains one policy per expert subset on identical seeds and evaluates each
/// on the regime suite.
std::vector<ScalingRow> scaling_study(const DataConfig& data, const std::vector<std::vector<ExpertKind>>& subsets,
                                      const ModelConfig& model, const TrainConfig& train,
                                      const RegimeConfig& eval, std::size_t eval_episodes,
                                      std::uint64_t seed, std::size_t workers = 1);

/// Tab-separated plot data: n_experts, experts, sharpe, mdd, pnl.
std::string format_scaling(const std::vector<ScalingRow>& rows);

struct AblationResult {
  RegimeTable table;
  /// Held-out imitation MSE against each source expert's labels:
  /// mse[i] = learned policy i scored on source i's validation records, and
  /// random_baseline_mse[i] = random-label policy scored on the same records.
  std::vector<std::string> sources;
  std::vector<double> mse;
  std::vector<double> random_baseline_mse;
  std::vector<std::shared_ptr<const FlowPolicyParams>> params;
};

/// Trains on random, AS-only and GLFT-drift-only labels and evaluates the
/// learners beside their source experts on common seeds.
AblationResult ablation_study(const DataConfig& data, const ModelConfig& model, const TrainConfig& train,
                              const RegimeConfig& eval, std::size_t eval_episodes, std::uint64_t seed,
                              std::size_t workers = 1);

std::string format_ablation(const AblationResult& r);

}  // namespace flowmm
