#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flowmm/env.hpp"
#include "flowmm/experts.hpp"
#include "flowmm/market.hpp"

namespace flowmm {

// ---------------------------------------------------------------------------
// Scenario grid

struct JumpRegime {
  double intensity = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

struct ExcitationRegime {
  double alpha_self = 0.0;   ///< alpha_bb = alpha_aa
  double alpha_cross = 0.0;  ///< alpha_ba = alpha_ab
};

/// Six axes, enumerated in this order with the last axis varying fastest.
/// Arrival level sets base_buy, base_sell and base_fill together.
struct GridConfig {
  std::vector<double> volatility{0.02, 0.1, 0.25};
  std::vector<double> arrival{25.0, 37.5, 50.0};
  std::vector<double> hurst{0.2, 0.5, 0.8};
  std::vector<double> drift{0.0, 0.02};
  std::vector<JumpRegime> jumps{{0.0, 0.0, 0.0}, {1.0, 0.0, 0.05}};
  std::vector<ExcitationRegime> excitation{{0.0, 0.0}, {2.0, 0.0}, {2.0, 1.0}};
  MarketParams base;  ///< every field not driven by an axis
};

struct Scenario {
  std::size_t id = 0;
  std::array<std::size_t, 6> axis_index{};
  MarketParams params;
};

struct ScenarioGrid {
  std::vector<Scenario> scenarios;
  std::array<std::size_t, 6> axis_lengths{};
};

ScenarioGrid build_scenario_grid(const GridConfig& cfg);

// ---------------------------------------------------------------------------
// Records

struct StateActionRecord {
  std::uint64_t scenario_id = 0;
  std::uint64_t episode_id = 0;
  std::uint64_t step = 0;
  std::uint32_t expert_id = 0;   ///< ExpertKind value
  std::vector<double> window;    ///< t_obs * kWindowFeatures, oldest first
  std::vector<double> actions;   ///< t_pred * kActionDim, (bid, ask) pairs

  bool operator==(const StateActionRecord&) const = default;
};

/// Rolls `expert` out for `n_episodes` and labels every step t with the
/// expert's realized quotes at t .. t + t_pred - 1.
/// Records per episode: n_steps - t_pred + 1.
std::vector<StateActionRecord> collect_pairs(const Scenario& scenario, const EnvConfig& env,
                                             ExpertKind expert, const ExpertConfig& expert_cfg,
                                             std::size_t n_episodes, std::size_t t_obs,
                                             std::size_t t_pred, std::uint64_t seed);

/// Validation episodes are those with episode_id % 10 == 9.
bool is_validation_episode(std::uint64_t episode_id);

// ---------------------------------------------------------------------------
// Normalization

struct FeatureStats {
  double mean = 0.0;
  double std = 1.0;
  bool degenerate = false;  ///< zero variance in the data; std forced to 1

  bool operator==(const FeatureStats&) const = default;
};

/// Per-feature statistics pooled over window positions and horizon steps.
struct NormStats {
  std::array<FeatureStats, kWindowFeatures> window;
  std::array<FeatureStats, kActionDim> action;

  static constexpr const char* kManifest = "time,cash,inventory,mid,prev_quoted_spread|bid,ask";

  bool operator==(const NormStats&) const = default;
  std::uint64_t fingerprint() const;
};

NormStats compute_norm_stats(std::span<const StateActionRecord> records);

std::vector<double> normalize_window(std::span<const double> window, const NormStats& s);
std::vector<double> denormalize_window(std::span<const double> window, const NormStats& s);
std::vector<double> normalize_actions(std::span<const double> actions, const NormStats& s);
std::vector<double> denormalize_actions(std::span<const double> actions, const NormStats& s);

// ---------------------------------------------------------------------------
// Persistence

struct Dataset {
  std::uint32_t t_obs = 0;
  std::uint32_t t_pred = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t config_hash = 0;
  NormStats stats;
  std::vector<StateActionRecord> records;

  bool operator==(const Dataset&) const = default;
};

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

/// In-memory codec used by the file functions.
std::string encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::string_view bytes);

/// One line per record, every double printed with 17 significant digits.
void export_dataset_text(const Dataset& ds, const std::filesystem::path& path);

}  // namespace flowmm
