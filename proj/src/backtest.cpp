#include "flowmm/backtest.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "flowmm/checksum.hpp"
#include "flowmm/errors.hpp"
#include "flowmm/metrics.hpp"
#include "flowmm/parallel.hpp"

namespace flowmm {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_sharpe(const std::optional<double>& s) { return s ? fmt(*s) : std::string("undef"); }

}  // namespace

MetricSummary summarize(std::span<const EpisodeMetrics> episodes) {
  MetricSummary s;
  s.episodes = episodes.size();
  if (episodes.empty()) return s;
  std::vector<double> pnl, mdd;
  pnl.reserve(episodes.size());
  mdd.reserve(episodes.size());
  for (const auto& e : episodes) {
    pnl.push_back(e.pnl);
    mdd.push_back(e.mdd);
  }
  const double root_n = std::sqrt(static_cast<double>(episodes.size()));
  s.mean_pnl = mean_of(pnl);
  s.pnl_stderr = sample_std(pnl) / root_n;
  s.sharpe = try_sharpe_ratio(pnl);
  s.mean_mdd = mean_of(mdd);
  s.mdd_stderr = sample_std(mdd) / root_n;
  return s;
}

BacktestReport evaluate_policy(const Policy& policy, std::span<const Scenario> scenarios,
                               const EnvConfig& env, std::size_t n_episodes, std::uint64_t seed,
                               const EvalOptions& opts) {
  env.validate();
  if (scenarios.empty()) throw PreconditionError("evaluate_policy: no scenarios");
  if (n_episodes < 2) throw PreconditionError("evaluate_policy: need at least two episodes per scenario");
  if (!(env.initial_cash > 0.0))
    throw ConfigError("evaluate_policy: initial_cash must be > 0 for drawdown ratios");

  BacktestReport rep;
  rep.policy_id = policy.name();
  rep.master_seed = seed;
  rep.config_hash = opts.config_hash;
  rep.scenarios.resize(scenarios.size());

  const std::size_t total = scenarios.size() * n_episodes;
  std::vector<EpisodeMetrics> flat(total);
  parallel_for(total, opts.workers, [&](std::size_t i) {
    const Scenario& sc = scenarios[i / n_episodes];
    const std::size_t e = i % n_episodes;
    const EpisodeResult r = run_episode(sc.params, env, policy, episode_seed(seed, sc.id, e));
    flat[i] = EpisodeMetrics{r.pnl(), r.objective, max_drawdown(r.value_series), r.final_inventory,
                             r.fills};
  });

  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    auto& sr = rep.scenarios[s];
    sr.scenario_id = scenarios[s].id;
    sr.label = "scenario-" + std::to_string(scenarios[s].id);
    sr.episodes.assign(flat.begin() + static_cast<std::ptrdiff_t>(s * n_episodes),
                       flat.begin() + static_cast<std::ptrdiff_t>((s + 1) * n_episodes));
    sr.summary = summarize(sr.episodes);
  }
  rep.aggregate = summarize(flat);
  return rep;
}

std::vector<Scenario> regime_scenarios(const RegimeConfig& cfg) {
  if (cfg.regimes.empty()) throw ConfigError("regime suite: no regimes configured");
  std::vector<Scenario> out;
  for (std::size_t i = 0; i < cfg.regimes.size(); ++i) {
    Scenario s;
    s.id = i;
    s.params = cfg.base;
    s.params.sigma = cfg.regimes[i].sigma;
    s.params.base_buy = s.params.base_sell = s.params.base_fill = cfg.regimes[i].arrival;
    s.params.hurst = cfg.hurst;
    s.params.mu = cfg.drift;
    s.params.validate();
    out.push_back(s);
  }
  return out;
}

RegimeTable regime_suite(std::span<const SuiteRow> rows, const RegimeConfig& cfg, const EnvConfig& env,
                         std::size_t n_episodes, std::uint64_t seed, const EvalOptions& opts) {
  const auto scenarios = regime_scenarios(cfg);
  RegimeTable t;
  for (const auto& r : cfg.regimes) t.regimes.push_back(r.name);
  for (const auto& row : rows) {
    if (row.per_regime.size() != 1 && row.per_regime.size() != scenarios.size())
      throw ConfigError("regime suite: row '" + row.name + "' needs one policy or one per regime");
    t.rows.push_back(row.name);
    std::vector<ScenarioReport> cells;
    for (std::size_t g = 0; g < scenarios.size(); ++g) {
      const Policy& p = *row.per_regime[row.per_regime.size() == 1 ? 0 : g];
      auto rep = evaluate_policy(p, std::span(&scenarios[g], 1), env, n_episodes, seed, opts);
      rep.scenarios[0].label = cfg.regimes[g].name;
      cells.push_back(std::move(rep.scenarios[0]));
    }
    t.cells.push_back(std::move(cells));
  }
  return t;
}

std::string format_regime_table(const RegimeTable& t) {
  std::ostringstream os;
  os << "policy";
  for (const auto& g : t.regimes) os << '\t' << g << "_pnl\t" << g << "_sr\t" << g << "_mdd";
  os << '\n';
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    os << t.rows[r];
    for (const auto& c : t.cells[r])
      os << '\t' << fmt(c.summary.mean_pnl) << '\t' << fmt_sharpe(c.summary.sharpe) << '\t'
         << fmt(c.summary.mean_mdd);
    os << '\n';
  }
  return os.str();
}

std::string format_summary(const RegimeTable& t, std::uint64_t seed, std::uint64_t config_hash) {
  std::ostringstream os;
  os << "policy\tregime\tmetric\tvalue\tseed\tconfig_hash\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t g = 0; g < t.regimes.size(); ++g) {
      const auto& s = t.cells[r][g].summary;
      auto line = [&](const char* metric, const std::string& v) {
        os << t.rows[r] << '\t' << t.regimes[g] << '\t' << metric << '\t' << v << '\t' << seed
           << '\t' << hex64(config_hash) << '\n';
      };
      line("pnl", fmt_exact(s.mean_pnl));
      line("pnl_stderr", fmt_exact(s.pnl_stderr));
      line("sharpe", s.sharpe ? fmt_exact(*s.sharpe) : "undef");
      line("mdd", fmt_exact(s.mean_mdd));
      line("mdd_stderr", fmt_exact(s.mdd_stderr));
      line("episodes", std::to_string(s.episodes));
    }
  return os.str();
}

std::string format_report(const BacktestReport& rep) {
  std::ostringstream os;
  os << "# policy=" << rep.policy_id << " seed=" << rep.master_seed
     << " config_hash=" << hex64(rep.config_hash) << "\n";
  os << "scenario\tepisode\tpnl\tobjective\tmdd\tfinal_inventory\tbid_fills\task_fills\n";
  for (const auto& s : rep.scenarios)
    for (std::size_t e = 0; e < s.episodes.size(); ++e) {
      const auto& m = s.episodes[e];
      os << s.label << '\t' << e << '\t' << fmt_exact(m.pnl) << '\t' << fmt_exact(m.objective) << '\t'
         << fmt_exact(m.mdd) << '\t' << m.final_inventory << '\t' << m.fills.bid << '\t'
         << m.fills.ask << '\n';
    }
  os << "# summary\nscope\tmean_pnl\tpnl_stderr\tsharpe\tmean_mdd\tmdd_stderr\tepisodes\n";
  auto line = [&](const std::string& scope, const MetricSummary& s) {
    os << scope << '\t' << fmt_exact(s.mean_pnl) << '\t' << fmt_exact(s.pnl_stderr) << '\t'
       << (s.sharpe ? fmt_exact(*s.sharpe) : "undef") << '\t' << fmt_exact(s.mean_mdd) << '\t'
       << fmt_exact(s.mdd_stderr) << '\t' << s.episodes << '\n';
  };
  for (const auto& s : rep.scenarios) line(s.label, s.summary);
  line("all", rep.aggregate);
  return os.str();
}

}  // namespace flowmm
