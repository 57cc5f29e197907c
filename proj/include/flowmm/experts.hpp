#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "flowmm/env.hpp"
#include "flowmm/market.hpp"

namespace flowmm {

/// Parameters read by the closed-form quoting formulas. sigma, k and A are the
/// strategy's beliefs and may differ from the simulator's truth.
struct ExpertConfig {
  double gamma = 0.1;       ///< risk aversion
  double k = 1.5;           ///< spread sensitivity
  double A = 25.0;          ///< base arrival rate
  double horizon_T = 1.0;   ///< AS terminal time
  double dt = 0.01;         ///< converts Observation::step to time
  double drift_mu = 0.0;    ///< drift used by GLFT-drift
  double sigma = 0.1;
  bool invert_inventory_skew = false;
  double random_lo = 0.0;   ///< random_quotes offset range
  double random_hi = 2.0;

  void validate() const;

  /// Copies sigma, k, A, mu, dt and T = n_steps * dt from the market.
  static ExpertConfig from_market(const MarketParams& p, double gamma);
};

QuoteAction as_quotes(const Observation& obs, const ExpertConfig& cfg);
QuoteAction glft_quotes(const Observation& obs, const ExpertConfig& cfg);
QuoteAction glft_drift_quotes(const Observation& obs, const ExpertConfig& cfg);
QuoteAction random_quotes(const Observation& obs, const ExpertConfig& cfg, Rng& rng);

/// Unclamped formula outputs, exposed for the skew identities.
QuoteAction as_quotes_raw(const Observation& obs, const ExpertConfig& cfg);
QuoteAction glft_quotes_raw(const Observation& obs, const ExpertConfig& cfg);
QuoteAction glft_drift_quotes_raw(const Observation& obs, const ExpertConfig& cfg);

/// (1/gamma) ln(1 + gamma/k), the risk-neutral half spread shared by every model.
double base_half_spread(double gamma, double k);

enum class ExpertKind : std::uint32_t { kAS = 0, kGLFT = 1, kGLFTDrift = 2, kRandom = 3 };

std::string_view expert_name(ExpertKind kind);
ExpertKind parse_expert(std::string_view name);

/// Deterministic experts ignore the RNG; the random baseline draws from it.
QuoteAction expert_quote(ExpertKind kind, const Observation& obs, const ExpertConfig& cfg, Rng& rng);

class ExpertPolicy final : public Policy {
 public:
  ExpertPolicy(ExpertKind kind, ExpertConfig cfg);
  ActionSequence plan(const ObservationWindow& window, Rng& rng) const override;
  std::string name() const override;
  ExpertKind kind() const { return kind_; }
  const ExpertConfig& config() const { return cfg_; }

 private:
  ExpertKind kind_;
  ExpertConfig cfg_;
};

/// Result of evaluating a candidate pool on one scenario.
struct ExpertSelection {
  std::size_t index = 0;              ///< position in the pool of the winner
  std::vector<double> mean_objective; ///< per pool member
  std::vector<double> sharpe;         ///< per pool member; -inf when undefined
};

/// Runs every pool member on the same `n_eval_episodes` seeds and picks the
/// highest mean objective; ties go to higher Sharpe, then the lower index.
ExpertSelection select_expert(const MarketParams& scenario, const EnvConfig& env,
                              const std::vector<ExpertKind>& pool, const ExpertConfig& cfg,
                              std::size_t n_eval_episodes, std::uint64_t seed);

}  // namespace flowmm
