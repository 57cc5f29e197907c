#include "flowmm/metrics.hpp"

#include <cmath>

#include "flowmm/errors.hpp"

namespace flowmm {

double cumulative_return(std::span<const double> returns) {
  double growth = 1.0;
  for (double r : returns) {
    if (!std::isfinite(r) || r <= -1.0) throw DomainError("cumulative_return: period return <= -1");
    growth *= 1.0 + r;
  }
  return growth - 1.0;
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double sharpe_ratio(std::span<const double> excess_returns) {
  if (excess_returns.size() < 2) throw DomainError("sharpe_ratio: need at least two returns");
  const double sd = sample_std(excess_returns);
  if (sd == 0.0) throw UndefinedSharpeError("sharpe_ratio: zero variance");
  return mean_of(excess_returns) / sd;
}

std::optional<double> try_sharpe_ratio(std::span<const double> excess_returns) {
  if (excess_returns.size() < 2) return std::nullopt;
  const double sd = sample_std(excess_returns);
  if (sd == 0.0 || !std::isfinite(sd)) return std::nullopt;
  return mean_of(excess_returns) / sd;
}

double max_drawdown(std::span<const double> values) {
  if (values.empty()) throw DomainError("max_drawdown: empty series");
  double peak = values.front();
  double worst = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw DomainError("max_drawdown: values must be > 0");
    if (v > peak) peak = v;
    const double dd = (peak - v) / peak;
    if (dd > worst) worst = dd;
  }
  return worst;
}

}  // namespace flowmm
