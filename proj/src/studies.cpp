#include "flowmm/studies.hpp"

#include <cstdio>
#include <sstream>

#include "flowmm/errors.hpp"
#include "flowmm/metrics.hpp"
#include "flowmm/parallel.hpp"

namespace flowmm {

ExpertConfig ExpertSettings::config_for(const MarketParams& p) const {
  ExpertConfig c = ExpertConfig::from_market(p, gamma);
  c.invert_inventory_skew = invert_inventory_skew;
  c.random_lo = random_lo;
  c.random_hi = random_hi;
  return c;
}

BuiltDataset build_dataset(const DataConfig& cfg, std::uint64_t seed, std::size_t workers,
                           std::uint64_t config_hash) {
  cfg.env.validate();
  if (cfg.experts.pool.empty()) throw ConfigError("dataset: expert pool is empty");
  const ScenarioGrid grid = build_scenario_grid(cfg.grid);
  const std::uint64_t select_seed = mix_seed(seed, static_cast<std::uint64_t>(Stream::kSelect));
  const std::uint64_t data_seed = mix_seed(seed, static_cast<std::uint64_t>(Stream::kData));

  const std::size_t n = grid.scenarios.size();
  std::vector<std::vector<StateActionRecord>> parts(n);
  std::vector<ExpertKind> chosen(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const Scenario& sc = grid.scenarios[i];
    const ExpertConfig ecfg = cfg.experts.config_for(sc.params);
    ExpertKind kind = cfg.experts.pool.front();
    if (cfg.experts.pool.size() > 1) {
      const auto sel = select_expert(sc.params, cfg.env, cfg.experts.pool, ecfg,
                                     cfg.experts.n_eval_episodes, mix_seed(select_seed, sc.id));
      kind = cfg.experts.pool[sel.index];
    }
    chosen[i] = kind;
    parts[i] = collect_pairs(sc, cfg.env, kind, ecfg, cfg.n_episodes, cfg.t_obs, cfg.t_pred, data_seed);
  });

  BuiltDataset out;
  out.chosen = std::move(chosen);
  Dataset& ds = out.dataset;
  ds.t_obs = cfg.t_obs;
  ds.t_pred = cfg.t_pred;
  ds.master_seed = seed;
  ds.config_hash = config_hash;
  for (auto& p : parts)
    for (auto& r : p) ds.records.push_back(std::move(r));
  std::vector<StateActionRecord> train;
  for (const auto& r : ds.records)
    if (!is_validation_episode(r.episode_id)) train.push_back(r);
  if (train.size() < 2) throw ConfigError("dataset: training split has fewer than two records");
  ds.stats = compute_norm_stats(train);
  return out;
}

double imitation_mse(const Policy& policy, std::span<const StateActionRecord> records,
                     std::size_t n_steps, std::uint64_t seed) {
  if (records.empty()) throw PreconditionError("imitation_mse: no records");
  const std::size_t t_obs = policy.window_length();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::size_t len = r.window.size() / kWindowFeatures;
    if (len < t_obs) throw PreconditionError("imitation_mse: record window is shorter than the policy's");
    ObservationWindow w(t_obs, n_steps);
    for (std::size_t k = len - t_obs; k < len; ++k) {
      const double* f = r.window.data() + k * kWindowFeatures;
      Observation o{static_cast<std::size_t>(std::llround(f[0] * static_cast<double>(n_steps))), f[1],
                    static_cast<int>(std::lround(f[2])), f[3], f[4]};
      w.push(o);
    }
    Rng rng = make_stream(mix_seed(seed, i), Stream::kPolicy);
    const ActionSequence plan = policy.plan(w, rng);
    const std::size_t h = std::min(plan.size(), r.actions.size() / kActionDim);
    for (std::size_t j = 0; j < h; ++j) {
      const double db = plan[j].delta_bid - r.actions[2 * j];
      const double da = plan[j].delta_ask - r.actions[2 * j + 1];
      sum += db * db + da * da;
      count += 2;
    }
  }
  return sum / static_cast<double>(count);
}

std::vector<ScalingRow> scaling_study(const DataConfig& data, const std::vector<std::vector<ExpertKind>>& subsets,
                                      const ModelConfig& model, const TrainConfig& train,
                                      const RegimeConfig& eval, std::size_t eval_episodes,
                                      std::uint64_t seed, std::size_t workers) {
  if (subsets.empty()) throw ConfigError("scaling study: no expert subsets");
  const auto scenarios = regime_scenarios(eval);
  const std::uint64_t eval_seed = mix_seed(seed, static_cast<std::uint64_t>(Stream::kBacktest));
  std::vector<ScalingRow> rows;
  for (const auto& subset : subsets) {
    if (subset.empty()) throw ConfigError("scaling study: empty expert subset");
    DataConfig dc = data;
    dc.experts.pool = subset;
    const auto built = build_dataset(dc, seed, workers);
    auto res = train_policy(built.dataset, model, train);
    auto params = std::make_shared<const FlowPolicyParams>(std::move(res.params));
    const FlowPolicy policy(params);
    const auto rep = evaluate_policy(policy, scenarios, data.env, eval_episodes, eval_seed, {workers, 0});
    ScalingRow row;
    row.experts = subset;
    row.summary = rep.aggregate;
    for (const auto& s : rep.scenarios) row.per_regime.push_back(s.summary);
    row.params = std::move(params);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_scaling(const std::vector<ScalingRow>& rows) {
  std::ostringstream os;
  os << "n_experts\texperts\tsharpe\tmdd\tpnl\n";
  char buf[64];
  for (const auto& r : rows) {
    std::string names;
    for (auto k : r.experts) names += (names.empty() ? "" : "+") + std::string(expert_name(k));
    os << r.experts.size() << '\t' << names << '\t';
    if (r.summary.sharpe) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.summary.sharpe);
      os << buf;
    } else {
      os << "undef";
    }
    std::snprintf(buf, sizeof buf, "\t%.17g\t%.17g\n", r.summary.mean_mdd, r.summary.mean_pnl);
    os << buf;
  }
  return os.str();
}

AblationResult ablation_study(const DataConfig& data, const ModelConfig& model, const TrainConfig& train,
                              const RegimeConfig& eval, std::size_t eval_episodes, std::uint64_t seed,
                              std::size_t workers) {
  const ExpertKind sources[] = {ExpertKind::kRandom, ExpertKind::kAS, ExpertKind::kGLFTDrift};
  static constexpr const char* kLearnedNames[] = {"Learning Random Action", "Learning AS Only",
                                                  "Learning GLFT-Drift Only"};
  static constexpr const char* kExpertNames[] = {"Random Action", "AS Expert", "GLFT-drift Expert"};

  AblationResult out;
  std::vector<std::vector<StateActionRecord>> holdout(3);
  for (std::size_t i = 0; i < 3; ++i) {
    DataConfig dc = data;
    dc.experts.pool = {sources[i]};
    auto built = build_dataset(dc, seed, workers);
    for (const auto& r : built.dataset.records)
      if (is_validation_episode(r.episode_id)) holdout[i].push_back(r);
    auto res = train_policy(built.dataset, model, train);
    out.params.push_back(std::make_shared<const FlowPolicyParams>(std::move(res.params)));
    out.sources.emplace_back(expert_name(sources[i]));
  }
  if (holdout[1].empty()) throw ConfigError("ablation: no validation episodes (need n_episodes >= 10)");

  std::vector<FlowPolicy> learners;
  for (std::size_t i = 0; i < 3; ++i) learners.emplace_back(out.params[i], 0, false, kLearnedNames[i]);
  const std::size_t n_steps = data.grid.base.n_steps;
  const std::uint64_t mse_seed = mix_seed(seed, static_cast<std::uint64_t>(Stream::kHoldout));
  for (std::size_t i = 0; i < 3; ++i) {
    out.mse.push_back(imitation_mse(learners[i], holdout[i], n_steps, mse_seed));
    out.random_baseline_mse.push_back(imitation_mse(learners[0], holdout[i], n_steps, mse_seed));
  }

  // Source experts, each with per-regime beliefs matching the regime's market.
  const auto scenarios = regime_scenarios(eval);
  std::vector<std::vector<std::unique_ptr<ExpertPolicy>>> experts(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (const auto& sc : scenarios)
      experts[i].push_back(std::make_unique<ExpertPolicy>(sources[i], data.experts.config_for(sc.params)));

  std::vector<SuiteRow> rows;
  for (std::size_t i = 0; i < 3; ++i) {
    SuiteRow r{kExpertNames[i], {}};
    for (const auto& e : experts[i]) r.per_regime.push_back(e.get());
    rows.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < 3; ++i) rows.push_back({kLearnedNames[i], {&learners[i]}});
  const std::uint64_t eval_seed = mix_seed(seed, static_cast<std::uint64_t>(Stream::kBacktest));
  out.table = regime_suite(rows, eval, data.env, eval_episodes, eval_seed, {workers, 0});
  return out;
}

std::string format_ablation(const AblationResult& r) {
  std::ostringstream os;
  os << format_regime_table(r.table);
  os << "\n# imitation fidelity (held-out per-coordinate MSE)\nsource\tlearned_mse\trandom_policy_mse\n";
  char buf[96];
  for (std::size_t i = 0; i < r.sources.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s\t%.17g\t%.17g\n", r.sources[i].c_str(), r.mse[i],
                  r.random_baseline_mse[i]);
    os << buf;
  }
  return os.str();
}

}  // namespace flowmm
