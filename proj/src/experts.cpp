#include "flowmm/experts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "flowmm/errors.hpp"
#include "flowmm/metrics.hpp"

namespace flowmm {

namespace {

QuoteAction clamp(QuoteAction a) {
  return {std::max(0.0, a.delta_bid), std::max(0.0, a.delta_ask)};
}

double skew_sign(const ExpertConfig& cfg) { return cfg.invert_inventory_skew ? -1.0 : 1.0; }

}  // namespace

void ExpertConfig::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("ExpertConfig: gamma must be > 0");
  if (!(k > 0.0)) throw ConfigError("ExpertConfig: k must be > 0");
  if (!(A > 0.0)) throw ConfigError("ExpertConfig: A must be > 0");
  if (!(horizon_T > 0.0)) throw ConfigError("ExpertConfig: horizon_T must be > 0");
  if (!(dt > 0.0)) throw ConfigError("ExpertConfig: dt must be > 0");
  if (!(sigma > 0.0)) throw ConfigError("ExpertConfig: sigma must be > 0");
  if (!(random_lo >= 0.0 && random_lo < random_hi))
    throw ConfigError("ExpertConfig: random range needs 0 <= lo < hi");
}

ExpertConfig ExpertConfig::from_market(const MarketParams& p, double gamma) {
  ExpertConfig c;
  c.gamma = gamma;
  c.k = p.fill_decay;
  c.A = p.base_fill;
  c.horizon_T = p.horizon();
  c.dt = p.dt;
  c.drift_mu = p.mu;
  c.sigma = p.sigma;
  return c;
}

double base_half_spread(double gamma, double k) { return std::log1p(gamma / k) / gamma; }

QuoteAction as_quotes_raw(const Observation& obs, const ExpertConfig& cfg) {
  const double tau = cfg.horizon_T - static_cast<double>(obs.step) * cfg.dt;
  // tolerate round-off at the final step
  if (tau < -1e-12 * cfg.horizon_T) throw PreconditionError("as_quotes: step is past horizon_T");
  const double t = std::max(tau, 0.0);
  const double g = cfg.gamma;
  const double var_term = g * cfg.sigma * cfg.sigma * t;
  const double mid = var_term / 2.0 + base_half_spread(g, cfg.k);
  const double skew = skew_sign(cfg) * obs.inventory * var_term;
  return {mid - skew, mid + skew};
}

QuoteAction glft_quotes_raw(const Observation& obs, const ExpertConfig& cfg) {
  const double g = cfg.gamma, k = cfg.k;
  const double c1 = base_half_spread(g, k);
  const double c2 = std::sqrt(g / (2.0 * cfg.A * k) * std::pow(1.0 + g / k, k / g + 1.0));
  const double half = c1 + cfg.sigma * c2 / 2.0;
  const double skew = skew_sign(cfg) * cfg.sigma * c2 * obs.inventory;
  return {half + skew, half - skew};
}

QuoteAction glft_drift_quotes_raw(const Observation& obs, const ExpertConfig& cfg) {
  const double g = cfg.gamma, k = cfg.k, s = cfg.sigma;
  if (!(s > 0.0)) throw DomainError("glft_drift_quotes: sigma must be > 0");
  const double c1 = base_half_spread(g, k);
  const double root = std::sqrt(s * s / (2.0 * k * cfg.A) * std::pow(1.0 + g / k, 1.0 + k / g));
  const double drift = cfg.drift_mu / (g * s * s);
  const double q = skew_sign(cfg) * obs.inventory;
  return {c1 + (-drift + (2.0 * q + 1.0) / 2.0) * root,
          c1 + (drift - (2.0 * q - 1.0) / 2.0) * root};
}

QuoteAction as_quotes(const Observation& obs, const ExpertConfig& cfg) {
  return clamp(as_quotes_raw(obs, cfg));
}

QuoteAction glft_quotes(const Observation& obs, const ExpertConfig& cfg) {
  return clamp(glft_quotes_raw(obs, cfg));
}

QuoteAction glft_drift_quotes(const Observation& obs, const ExpertConfig& cfg) {
  return clamp(glft_drift_quotes_raw(obs, cfg));
}

QuoteAction random_quotes(const Observation&, const ExpertConfig& cfg, Rng& rng) {
  if (!(cfg.random_lo >= 0.0 && cfg.random_lo < cfg.random_hi))
    throw ConfigError("random_quotes: range needs 0 <= lo < hi");
  std::uniform_real_distribution<double> u(cfg.random_lo, cfg.random_hi);
  const double b = u(rng);
  const double a = u(rng);
  return {b, a};
}

std::string_view expert_name(ExpertKind kind) {
  switch (kind) {
    case ExpertKind::kAS: return "as";
    case ExpertKind::kGLFT: return "glft";
    case ExpertKind::kGLFTDrift: return "glft-drift";
    case ExpertKind::kRandom: return "random";
  }
  return "unknown";
}

ExpertKind parse_expert(std::string_view name) {
  for (auto k : {ExpertKind::kAS, ExpertKind::kGLFT, ExpertKind::kGLFTDrift, ExpertKind::kRandom})
    if (expert_name(k) == name) return k;
  throw ConfigError("unknown expert '" + std::string(name) + "'");
}

QuoteAction expert_quote(ExpertKind kind, const Observation& obs, const ExpertConfig& cfg,
                         Rng& rng) {
  switch (kind) {
    case ExpertKind::kAS: return as_quotes(obs, cfg);
    case ExpertKind::kGLFT: return glft_quotes(obs, cfg);
    case ExpertKind::kGLFTDrift: return glft_drift_quotes(obs, cfg);
    case ExpertKind::kRandom: return random_quotes(obs, cfg, rng);
  }
  throw ConfigError("unknown expert kind");
}

ExpertPolicy::ExpertPolicy(ExpertKind kind, ExpertConfig cfg) : kind_(kind), cfg_(cfg) {
  cfg_.validate();
}

ActionSequence ExpertPolicy::plan(const ObservationWindow& window, Rng& rng) const {
  return {expert_quote(kind_, window.latest(), cfg_, rng)};
}

std::string ExpertPolicy::name() const { return std::string(expert_name(kind_)); }

ExpertSelection select_expert(const MarketParams& scenario, const EnvConfig& env,
                              const std::vector<ExpertKind>& pool, const ExpertConfig& cfg,
                              std::size_t n_eval_episodes, std::uint64_t seed) {
  if (pool.empty()) throw ConfigError("select_expert: empty pool");
  if (n_eval_episodes == 0) throw ConfigError("select_expert: n_eval_episodes must be >= 1");

  ExpertSelection sel;
  for (ExpertKind kind : pool) {
    const ExpertPolicy policy(kind, cfg);
    std::vector<double> objectives;
    objectives.reserve(n_eval_episodes);
    for (std::size_t e = 0; e < n_eval_episodes; ++e)
      objectives.push_back(run_episode(scenario, env, policy, mix_seed(seed, e)).objective);
    double sum = 0.0;
    for (double v : objectives) sum += v;
    sel.mean_objective.push_back(sum / static_cast<double>(n_eval_episodes));
    sel.sharpe.push_back(try_sharpe_ratio(objectives).value_or(-std::numeric_limits<double>::infinity()));
  }
  for (std::size_t i = 1; i < pool.size(); ++i) {
    const double m = sel.mean_objective[i], best = sel.mean_objective[sel.index];
    if (m > best || (m == best && sel.sharpe[i] > sel.sharpe[sel.index])) sel.index = i;
  }
  return sel;
}

}  // namespace flowmm
