#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowmm/backtest.hpp"
#include "flowmm/env.hpp"

namespace flowmm {

/// a' = scale * a + (bid, ask), applied to every step of a plan.
struct LinearAdjust {
  double scale = 1.0;
  double bid = 0.0;
  double ask = 0.0;

  bool is_identity() const { return scale == 1.0 && bid == 0.0 && ask == 0.0; }
  /// |scale - 1| + |bid| + |ask|
  double distance_from_identity() const;

  bool operator==(const LinearAdjust&) const = default;
};

ActionSequence apply_adjust(const ActionSequence& seq, const LinearAdjust& adj);

/// Wraps a policy and adjusts every plan it produces.
class AdjustedPolicy final : public Policy {
 public:
  AdjustedPolicy(const Policy& base, LinearAdjust adj);
  ActionSequence plan(const ObservationWindow& window, Rng& rng) const override;
  std::size_t window_length() const override { return base_.window_length(); }
  std::string name() const override;
  const LinearAdjust& adjust() const { return adj_; }

 private:
  const Policy& base_;
  LinearAdjust adj_;
};

struct AdjustGrid {
  std::vector<double> scales{0.8, 0.9, 1.0, 1.1, 1.2};
  std::vector<double> bid_offsets = default_offsets();
  std::vector<double> ask_offsets = default_offsets();

  /// -0.4, -0.3, ..., 0.7
  static std::vector<double> default_offsets();

  /// Non-empty axes containing the identity (1, 0, 0).
  void validate() const;
  std::size_t size() const { return scales.size() * bid_offsets.size() * ask_offsets.size(); }
};

struct GridCell {
  LinearAdjust adjust;
  MetricSummary summary;
};

struct GridSearchResult {
  LinearAdjust best;
  std::size_t best_index = 0;  ///< into cells
  std::size_t identity_index = 0;
  std::vector<GridCell> cells;  ///< scale-major enumeration order
};

/// Scores every cell on the same per-episode seeds. Picks the highest mean PnL,
/// then higher Sharpe, then the cell closest to identity, then the smallest
/// (scale, bid, ask).
GridSearchResult grid_search_adjust(const Policy& policy, std::span<const Scenario> validation,
                                    const EnvConfig& env, const AdjustGrid& grid,
                                    std::size_t n_episodes, std::uint64_t seed,
                                    const EvalOptions& opts = {});

/// Tab-separated: scale, b_bid, b_ask, mean_pnl, sharpe, mdd, selected.
std::string format_score_table(const GridSearchResult& result);

}  // namespace flowmm
