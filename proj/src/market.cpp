#include "flowmm/market.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <tuple>

#include "flowmm/errors.hpp"

namespace flowmm {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("MarketParams: ") + what);
}

using FbmKey = std::tuple<double, std::size_t, double>;

std::shared_ptr<const Eigen::MatrixXd> fbm_factor(double hurst, std::size_t n, double dt) {
  static std::mutex mu;
  static std::map<FbmKey, std::shared_ptr<const Eigen::MatrixXd>> cache;
  const FbmKey key{hurst, n, dt};
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double scale = std::pow(dt, 2.0 * hurst);
  Eigen::MatrixXd cov(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cov(i, j) = scale * fbm_increment_autocov(hurst, i > j ? i - j : j - i);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw DomainError("fBm covariance is not positive definite");
  auto factor = std::make_shared<const Eigen::MatrixXd>(llt.matrixL());
  std::lock_guard lock(mu);
  return cache.emplace(key, std::move(factor)).first->second;
}

}  // namespace

double MarketParams::branching_radius() const {
  // eigenvalues of a 2x2 matrix: tr/2 +- sqrt(tr^2/4 - det)
  const double a = alpha_bb / beta, b = alpha_ba / beta, c = alpha_ab / beta, d = alpha_aa / beta;
  const double tr = a + d;
  const double disc = tr * tr / 4.0 - (a * d - b * c);
  // entries are nonnegative, so the Perron root is real
  return tr / 2.0 + std::sqrt(std::max(disc, 0.0));
}

void MarketParams::validate() const {
  require(std::isfinite(mu), "mu must be finite");
  require(sigma >= 0.0, "sigma must be >= 0");
  require(hurst > 0.0 && hurst < 1.0, "hurst must lie in (0, 1)");
  require(beta > 0.0, "beta must be > 0");
  require(dt > 0.0, "dt must be > 0");
  require(n_steps >= 1, "n_steps must be >= 1");
  require(s0 > 0.0, "s0 must be > 0");
  require(fill_decay > 0.0, "fill_decay must be > 0");
  require(jump_intensity >= 0.0 && base_buy >= 0.0 && base_sell >= 0.0 && base_fill >= 0.0,
          "intensities must be >= 0");
  require(alpha_bb >= 0.0 && alpha_aa >= 0.0 && alpha_ba >= 0.0 && alpha_ab >= 0.0,
          "excitation jumps must be >= 0");
  require(jump_std >= 0.0, "jump_std must be >= 0");
  if (branching_radius() >= 1.0) {
    std::ostringstream os;
    os << "MarketParams: Hawkes branching matrix is non-stationary (spectral radius "
       << branching_radius() << " >= 1)";
    throw ConfigError(os.str());
  }
}

double fbm_increment_autocov(double hurst, std::size_t lag) {
  const double h2 = 2.0 * hurst;
  const double k = static_cast<double>(lag);
  if (lag == 0) return 1.0;
  return 0.5 * (std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) + std::pow(k - 1.0, h2));
}

double fbm_covariance(double hurst, double t, double s) {
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

std::vector<double> gen_fbm_increments(double hurst, std::size_t n, double dt, Rng& rng) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError("hurst must lie in (0, 1)");
  if (!(dt > 0.0)) throw DomainError("dt must be > 0");
  if (n == 0) return {};
  const auto factor = fbm_factor(hurst, n, dt);
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = standard_normal(rng);
  const Eigen::VectorXd x = factor->triangularView<Eigen::Lower>() * z;
  return {x.data(), x.data() + x.size()};
}

double midprice_step(double s, const MarketParams& p, double fbm_increment,
                     std::span<const double> log_jumps) {
  double next = s * (1.0 + p.mu * p.dt + p.sigma * fbm_increment);
  if (!log_jumps.empty()) {
    double total = 0.0;
    for (double j : log_jumps) total += j;
    next += s * (std::exp(total) - 1.0);
  }
  return std::max(next, 1e-6 * p.s0);
}

std::vector<double> simulate_midprice(const MarketParams& p, Rng& rng) {
  p.validate();
  const auto db = gen_fbm_increments(p.hurst, p.n_steps, p.dt, rng);
  std::poisson_distribution<int> jumps(p.jump_intensity * p.dt);
  std::normal_distribution<double> size(p.jump_mean, p.jump_std);
  std::vector<double> path(p.n_steps + 1);
  path[0] = p.s0;
  std::vector<double> draws;
  for (std::size_t i = 0; i < p.n_steps; ++i) {
    draws.clear();
    if (p.jump_intensity > 0.0) {
      const int n = jumps(rng);
      for (int j = 0; j < n; ++j) draws.push_back(p.jump_std > 0.0 ? size(rng) : p.jump_mean);
    }
    path[i + 1] = midprice_step(path[i], p, db[i], draws);
  }
  return path;
}

std::pair<double, double> hawkes_intensity(double t, std::span<const double> buy_history,
                                           std::span<const double> sell_history,
                                           const MarketParams& p) {
  double lb = p.base_buy, la = p.base_sell;
  for (double ti : buy_history) {
    if (ti > t) throw PreconditionError("hawkes_intensity: buy event after t");
    const double decay = std::exp(-p.beta * (t - ti));
    lb += p.alpha_bb * decay;
    la += p.alpha_ab * decay;
  }
  for (double tj : sell_history) {
    if (tj > t) throw PreconditionError("hawkes_intensity: sell event after t");
    const double decay = std::exp(-p.beta * (t - tj));
    la += p.alpha_aa * decay;
    lb += p.alpha_ba * decay;
  }
  return {lb, la};
}

HawkesEvents simulate_hawkes(const MarketParams& p, double horizon, Rng& rng) {
  if (!(horizon > 0.0)) throw PreconditionError("simulate_hawkes: horizon must be > 0");
  if (p.branching_radius() >= 1.0) p.validate();  // throws with the radius in the message
  if (!(p.beta > 0.0)) throw ConfigError("MarketParams: beta must be > 0");

  HawkesEvents ev;
  // With a shared decay rate the excitation state is two scalars that decay
  // together, so the current total intensity bounds the intensity until the
  // next accepted event.
  double excite_b = 0.0, excite_a = 0.0;
  double t = 0.0;
  while (true) {
    const double lb = p.base_buy + excite_b;
    const double la = p.base_sell + excite_a;
    const double bound = lb + la;
    if (bound <= 0.0) break;
    const double wait = std::exponential_distribution<double>(bound)(rng);
    const double decay = std::exp(-p.beta * wait);
    t += wait;
    if (t >= horizon) break;
    excite_b *= decay;
    excite_a *= decay;
    const double nb = p.base_buy + excite_b;
    const double na = p.base_sell + excite_a;
    const double u = uniform01(rng) * bound;
    if (u < nb) {
      ev.buys.push_back(t);
      excite_b += p.alpha_bb;
      excite_a += p.alpha_ab;
    } else if (u < nb + na) {
      ev.sells.push_back(t);
      excite_a += p.alpha_aa;
      excite_b += p.alpha_ba;
    }
  }
  return ev;
}

std::vector<std::vector<MarketOrder>> bucket_orders(const HawkesEvents& ev, double dt,
                                                    std::size_t n_steps) {
  std::vector<MarketOrder> all;
  all.reserve(ev.buys.size() + ev.sells.size());
  for (double t : ev.buys) all.push_back({t, Side::kBuy});
  for (double t : ev.sells) all.push_back({t, Side::kSell});
  std::stable_sort(all.begin(), all.end(),
                   [](const MarketOrder& a, const MarketOrder& b) { return a.time < b.time; });
  std::vector<std::vector<MarketOrder>> out(n_steps);
  for (const auto& o : all) {
    auto k = static_cast<std::size_t>(std::floor(o.time / dt));
    if (k >= n_steps) k = n_steps - 1;
    out[k].push_back(o);
  }
  return out;
}

MarketPath simulate_market(const MarketParams& p, Rng& rng) {
  p.validate();
  MarketPath path;
  path.mid = simulate_midprice(p, rng);
  path.orders = bucket_orders(simulate_hawkes(p, p.horizon(), rng), p.dt, p.n_steps);
  return path;
}

}  // namespace flowmm
