#pragma once

#include <optional>
#include <span>

namespace flowmm {

/// prod(1 + r_i) - 1. Throws DomainError if any r_i <= -1.
double cumulative_return(std::span<const double> returns);

/// mean / sample std (n - 1). Needs >= 2 entries; a zero std throws
/// UndefinedSharpeError. Risk-free rate is taken as already subtracted.
double sharpe_ratio(std::span<const double> excess_returns);

/// Same as sharpe_ratio but returns nullopt when the ratio is undefined.
std::optional<double> try_sharpe_ratio(std::span<const double> excess_returns);

/// Largest (peak - trough) / peak over a strictly positive value series.
double max_drawdown(std::span<const double> values);

double mean_of(std::span<const double> xs);

/// Sample standard deviation; 0 for fewer than two entries.
double sample_std(std::span<const double> xs);

}  // namespace flowmm
