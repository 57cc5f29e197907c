#include "flowmm/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <tuple>

#include "flowmm/errors.hpp"

namespace flowmm {

double LinearAdjust::distance_from_identity() const {
  return std::abs(scale - 1.0) + std::abs(bid) + std::abs(ask);
}

ActionSequence apply_adjust(const ActionSequence& seq, const LinearAdjust& adj) {
  ActionSequence out;
  out.reserve(seq.size());
  for (const auto& a : seq)
    out.push_back({std::max(0.0, adj.scale * a.delta_bid + adj.bid),
                   std::max(0.0, adj.scale * a.delta_ask + adj.ask)});
  return out;
}

AdjustedPolicy::AdjustedPolicy(const Policy& base, LinearAdjust adj) : base_(base), adj_(adj) {
  if (!std::isfinite(adj.scale) || !std::isfinite(adj.bid) || !std::isfinite(adj.ask))
    throw ConfigError("LinearAdjust: entries must be finite");
}

ActionSequence AdjustedPolicy::plan(const ObservationWindow& window, Rng& rng) const {
  return apply_adjust(base_.plan(window, rng), adj_);
}

std::string AdjustedPolicy::name() const {
  if (adj_.is_identity()) return base_.name();
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s*%g+[%g,%g]", base_.name().c_str(), adj_.scale, adj_.bid, adj_.ask);
  return buf;
}

std::vector<double> AdjustGrid::default_offsets() {
  std::vector<double> v;
  // integer tenths keep 0 exact
  for (int i = -4; i <= 7; ++i) v.push_back(i / 10.0);
  return v;
}

void AdjustGrid::validate() const {
  if (scales.empty() || bid_offsets.empty() || ask_offsets.empty())
    throw ConfigError("AdjustGrid: every axis needs at least one value");
  auto has = [](const std::vector<double>& v, double x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  if (!has(scales, 1.0) || !has(bid_offsets, 0.0) || !has(ask_offsets, 0.0))
    throw ConfigError("AdjustGrid: the identity (scale 1, offsets 0) must be in the grid");
  for (const auto* axis : {&scales, &bid_offsets, &ask_offsets})
    for (double x : *axis)
      if (!std::isfinite(x)) throw ConfigError("AdjustGrid: non-finite entry");
}

GridSearchResult grid_search_adjust(const Policy& policy, std::span<const Scenario> validation,
                                    const EnvConfig& env, const AdjustGrid& grid,
                                    std::size_t n_episodes, std::uint64_t seed,
                                    const EvalOptions& opts) {
  if (validation.empty()) throw PreconditionError("grid_search_adjust: no validation scenarios");
  grid.validate();

  GridSearchResult res;
  res.cells.reserve(grid.size());
  for (double a : grid.scales)
    for (double b : grid.bid_offsets)
      for (double c : grid.ask_offsets) {
        const LinearAdjust adj{a, b, c};
        const AdjustedPolicy p(policy, adj);
        const auto rep = evaluate_policy(p, validation, env, n_episodes, seed, opts);
        if (adj.is_identity()) res.identity_index = res.cells.size();
        res.cells.push_back({adj, rep.aggregate});
      }

  // Strict total order; lower key wins.
  auto key = [](const GridCell& c) {
    const double sr = c.summary.sharpe.value_or(-std::numeric_limits<double>::infinity());
    return std::make_tuple(-c.summary.mean_pnl, -sr, c.adjust.distance_from_identity(),
                           c.adjust.scale, c.adjust.bid, c.adjust.ask);
  };
  for (std::size_t i = 1; i < res.cells.size(); ++i)
    if (key(res.cells[i]) < key(res.cells[res.best_index])) res.best_index = i;
  res.best = res.cells[res.best_index].adjust;
  return res;
}

std::string format_score_table(const GridSearchResult& r) {
  std::ostringstream os;
  os << "scale\tb_bid\tb_ask\tmean_pnl\tsharpe\tmdd\tselected\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    const auto& c = r.cells[i];
    os << num(c.adjust.scale) << '\t' << num(c.adjust.bid) << '\t' << num(c.adjust.ask) << '\t'
       << num(c.summary.mean_pnl) << '\t'
       << (c.summary.sharpe ? num(*c.summary.sharpe) : std::string("undef")) << '\t'
       << num(c.summary.mean_mdd) << '\t' << (i == r.best_index ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace flowmm
