#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flowmm/backtest.hpp"
#include "flowmm/finetune.hpp"
#include "flowmm/flow_policy.hpp"
#include "flowmm/studies.hpp"

namespace flowmm::cli {

using Json = nlohmann::json;

/// Every key the config file may contain, with its default value.
Json default_config();

/// Reads a JSON file (// and /* */ comments allowed) and merges it over the
/// defaults. Unknown keys and type mismatches throw ConfigError naming the key.
Json load_config(const std::filesystem::path& path);

/// Applies "a.b.c=value" overrides. The value is parsed as JSON when possible
/// and as a bare string otherwise.
void apply_overrides(Json& cfg, const std::vector<std::string>& overrides);

/// Merges `user` into `base` with the same checks as load_config.
void merge_checked(Json& base, const Json& user, const std::string& prefix = "");

std::uint64_t config_hash(const Json& cfg);

// Typed views. Each validates its section fully.
MarketParams market_from(const Json& cfg);
EnvConfig env_from(const Json& cfg);
ExpertSettings experts_from(const Json& cfg);
GridConfig grid_from(const Json& cfg);
DataConfig data_from(const Json& cfg);
ModelConfig model_from(const Json& cfg);
TrainConfig train_from(const Json& cfg, std::uint64_t seed);
AdjustGrid adjust_grid_from(const Json& cfg);
RegimeConfig regimes_from(const Json& cfg);
std::vector<std::vector<ExpertKind>> scaling_subsets_from(const Json& cfg);
/// Grid spanned by the backtest regimes (H, drift fixed; no jumps or excitation).
GridConfig regime_grid_from(const Json& cfg);

}  // namespace flowmm::cli
