#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "flowmm/rng.hpp"

namespace flowmm {

/// Coefficients of one simulated market: jump-diffusion mid-price driven by
/// fractional Brownian motion, plus a bivariate Hawkes order flow.
struct MarketParams {
  double mu = 0.0;            ///< drift (1/time)
  double sigma = 0.1;         ///< volatility (1/sqrt(time))
  double hurst = 0.5;
  double jump_intensity = 0;  ///< lambda_J (events/time)
  double jump_mean = 0.0;     ///< mu_J, log-return units
  double jump_std = 0.0;      ///< sigma_J, log-return units
  double base_buy = 25.0;     ///< mu_b (events/time)
  double base_sell = 25.0;    ///< mu_a (events/time)
  double alpha_bb = 0.0;      ///< buy -> buy excitation
  double alpha_aa = 0.0;      ///< sell -> sell excitation
  double alpha_ba = 0.0;      ///< sell -> buy excitation
  double alpha_ab = 0.0;      ///< buy -> sell excitation
  double beta = 5.0;          ///< excitation decay (1/time)
  double fill_decay = 1.5;    ///< k (1/price)
  double base_fill = 25.0;    ///< A (events/time), read by the GLFT formulas only
  double s0 = 100.0;
  double dt = 0.01;
  std::size_t n_steps = 100;

  double horizon() const { return dt * static_cast<double>(n_steps); }

  /// Spectral radius of [[a_bb, a_ba], [a_ab, a_aa]] / beta.
  double branching_radius() const;

  /// Throws ConfigError describing the first violated invariant.
  void validate() const;
};

/// Gaussian fBm increments over n steps of size dt. Exact: Cholesky factor of
/// the increment autocovariance, cached per (hurst, n, dt).
std::vector<double> gen_fbm_increments(double hurst, std::size_t n, double dt, Rng& rng);

/// Autocovariance of unit-step fBm increments at lag k.
double fbm_increment_autocov(double hurst, std::size_t lag);

/// Closed-form covariance of B_H(t) and B_H(s).
double fbm_covariance(double hurst, double t, double s);

/// One Euler step of the mid-price. `log_jumps` holds the J draws landing in
/// this step; the result is floored at 1e-6 * s0.
double midprice_step(double s, const MarketParams& p, double fbm_increment,
                     std::span<const double> log_jumps);

/// Mid-price path of length n_steps + 1 starting at s0.
std::vector<double> simulate_midprice(const MarketParams& p, Rng& rng);

/// Intensities (lambda_b, lambda_a) at time t given past event times.
std::pair<double, double> hawkes_intensity(double t, std::span<const double> buy_history,
                                           std::span<const double> sell_history,
                                           const MarketParams& p);

struct HawkesEvents {
  std::vector<double> buys;   ///< market buy arrival times (lift the ask)
  std::vector<double> sells;  ///< market sell arrival times (hit the bid)
};

/// Ogata thinning on [0, horizon).
HawkesEvents simulate_hawkes(const MarketParams& p, double horizon, Rng& rng);

enum class Side : std::uint8_t { kBuy, kSell };

struct MarketOrder {
  double time = 0.0;
  Side side = Side::kBuy;
};

/// Pre-sampled exogenous randomness of one episode: the mid-price path and the
/// market orders falling in each step, in time order.
struct MarketPath {
  std::vector<double> mid;                       ///< n_steps + 1 prices
  std::vector<std::vector<MarketOrder>> orders;  ///< n_steps buckets
};

MarketPath simulate_market(const MarketParams& p, Rng& rng);

/// Buckets merged event times into steps [k dt, (k+1) dt).
std::vector<std::vector<MarketOrder>> bucket_orders(const HawkesEvents& ev, double dt,
                                                    std::size_t n_steps);

}  // namespace flowmm
