#include "flowmm/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>

#include "flowmm/backtest.hpp"
#include "flowmm/checksum.hpp"
#include "flowmm/cli/config.hpp"
#include "flowmm/cli/manifest.hpp"
#include "flowmm/dataset.hpp"
#include "flowmm/experts.hpp"
#include "flowmm/finetune.hpp"
#include "flowmm/flow_policy.hpp"
#include "flowmm/metrics.hpp"
#include "flowmm/studies.hpp"

namespace fs = std::filesystem;

namespace flowmm::cli {

namespace {

class HelpRequested : public Error {
 public:
  using Error::Error;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Everything a command needs once its config is validated.
struct Context {
  const RunConfig& run;
  Json cfg;
  std::uint64_t hash = 0;
  std::size_t workers = 1;
  std::ostream& out;
};

fs::path path_or_default(const Json& cfg, const char* key, const fs::path& fallback) {
  const auto v = cfg.at("paths").at(key).get<std::string>();
  return v.empty() ? fallback : fs::path(v);
}

void require_input(const fs::path& p) {
  if (!fs::exists(p)) throw ConfigError("input not found: " + p.string());
}

/// Expert policies whose beliefs match each regime's market.
struct ExpertRows {
  std::vector<std::unique_ptr<Policy>> owned;
  std::vector<SuiteRow> rows;
};

ExpertRows expert_rows(const RegimeConfig& regimes, const ExpertSettings& xs,
                       const std::vector<std::pair<ExpertKind, std::string>>& kinds) {
  ExpertRows out;
  const auto scenarios = regime_scenarios(regimes);
  for (const auto& [kind, label] : kinds) {
    SuiteRow row{label, {}};
    for (const auto& sc : scenarios) {
      out.owned.push_back(std::make_unique<ExpertPolicy>(kind, xs.config_for(sc.params)));
      row.per_regime.push_back(out.owned.back().get());
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

const std::vector<std::pair<ExpertKind, std::string>>& standard_experts() {
  static const std::vector<std::pair<ExpertKind, std::string>> k{{ExpertKind::kRandom, "Random Action"},
                                                                 {ExpertKind::kAS, "AS Expert"},
                                                                 {ExpertKind::kGLFT, "GLFT Expert"},
                                                                 {ExpertKind::kGLFTDrift, "GLFT-drift Expert"}};
  return k;
}

// ---------------------------------------------------------------------------
// Commands. Each is split into a validation step (config only, no side
// effects) and a run step.

struct Command {
  std::vector<std::string> artifacts;
  std::function<void(Context&, RunManifest&)> run;
};

Command cmd_simulate(Context& ctx) {
  const MarketParams m = market_from(ctx.cfg);
  const EnvConfig env = env_from(ctx.cfg);
  const ExpertSettings xs = experts_from(ctx.cfg);
  const ExpertKind kind = parse_expert(ctx.cfg.at("simulate").at("expert").get<std::string>());
  const auto n = ctx.cfg.at("simulate").at("n_episodes").get<std::int64_t>();
  if (n < 1) throw ConfigError("config: simulate.n_episodes must be >= 1");
  return {{"simulate.tsv"}, [=](Context& c, RunManifest& man) {
            const ExpertPolicy policy(kind, xs.config_for(m));
            std::ostringstream os;
            os << "episode\tstep\tmid\tcash\tinventory\tdelta_bid\tdelta_ask\tvalue\n";
            for (std::int64_t e = 0; e < n; ++e) {
              const auto r = run_episode(m, env, policy, episode_seed(c.run.seed, 0, static_cast<std::uint64_t>(e)),
                                         {.record_trajectory = true});
              for (std::size_t t = 0; t < r.observations.size(); ++t) {
                const auto& o = r.observations[t];
                const QuoteAction a = t < r.actions.size() ? r.actions[t] : QuoteAction{};
                os << e << '\t' << t << '\t' << num(o.mid) << '\t' << num(o.cash) << '\t' << o.inventory
                   << '\t' << num(a.delta_bid) << '\t' << num(a.delta_ask) << '\t' << num(r.value_series[t])
                   << '\n';
              }
              c.out << "episode " << e << ": pnl " << r.pnl() << ", fills " << r.fills.bid << "/"
                    << r.fills.ask << ", final inventory " << r.final_inventory << "\n";
            }
            man.write_artifact("simulate.tsv", os.str());
          }};
}

Command cmd_gen_data(Context& ctx) {
  const DataConfig d = data_from(ctx.cfg);
  const bool text = ctx.cfg.at("dataset").at("text_export").get<bool>();
  std::vector<std::string> arts{"dataset.bin", "experts.tsv"};
  if (text) arts.push_back("dataset.txt");
  return {arts, [=](Context& c, RunManifest& man) {
            const auto built = build_dataset(d, c.run.seed, c.workers, c.hash);
            man.expect("dataset.bin");
            write_dataset(built.dataset, man.out_dir() / "dataset.bin");
            man.record("dataset.bin");
            std::ostringstream os;
            os << "scenario\texpert\n";
            for (std::size_t i = 0; i < built.chosen.size(); ++i)
              os << i << '\t' << expert_name(built.chosen[i]) << '\n';
            man.write_artifact("experts.tsv", os.str());
            if (text) {
              man.expect("dataset.txt");
              export_dataset_text(built.dataset, man.out_dir() / "dataset.txt");
              man.record("dataset.txt");
            }
            c.out << "wrote " << built.dataset.records.size() << " records from "
                  << built.chosen.size() << " scenarios\n";
          }};
}

Command cmd_train(Context& ctx) {
  const ModelConfig model = model_from(ctx.cfg);
  const TrainConfig train = train_from(ctx.cfg, ctx.run.seed);
  const fs::path data = path_or_default(ctx.cfg, "dataset", ctx.run.out_dir / "dataset.bin");
  require_input(data);
  return {{"model.ckpt", "loss.tsv"}, [=](Context& c, RunManifest& man) {
            man.add_input(data);
            const Dataset ds = read_dataset(data);
            const auto res = train_policy(ds, model, train);
            man.expect("model.ckpt");
            save_checkpoint(res.params, man.out_dir() / "model.ckpt");
            man.record("model.ckpt");
            std::ostringstream os;
            os << "step\tloss\n";
            for (std::size_t i = 0; i < res.loss_curve.size(); ++i) os << i << '\t' << num(res.loss_curve[i]) << '\n';
            man.write_artifact("loss.tsv", os.str());
            if (!res.loss_curve.empty())
              c.out << "trained " << res.loss_curve.size() << " steps, final loss " << res.loss_curve.back() << "\n";
          }};
}

Command cmd_finetune(Context& ctx) {
  const EnvConfig env = env_from(ctx.cfg);
  const RegimeConfig regimes = regimes_from(ctx.cfg);
  const AdjustGrid grid = adjust_grid_from(ctx.cfg);
  const auto n = ctx.cfg.at("finetune").at("n_episodes").get<std::int64_t>();
  if (n < 2) throw ConfigError("config: finetune.n_episodes must be >= 2");
  const bool per_regime = ctx.cfg.at("finetune").at("per_regime").get<bool>();
  const bool det = ctx.cfg.at("model").at("deterministic_prior").get<bool>();
  const fs::path ckpt = path_or_default(ctx.cfg, "checkpoint", ctx.run.out_dir / "model.ckpt");
  require_input(ckpt);
  return {{"finetune.tsv", "adjust.json"}, [=](Context& c, RunManifest& man) {
            man.add_input(ckpt);
            auto params = std::make_shared<const FlowPolicyParams>(load_checkpoint(ckpt));
            const FlowPolicy policy(params, 0, det);
            const auto scenarios = regime_scenarios(regimes);
            const std::uint64_t vseed = mix_seed(c.run.seed, static_cast<std::uint64_t>(Stream::kValidation));
            std::ostringstream table;
            Json adj = Json::object();
            auto record = [&](const std::string& label, std::span<const Scenario> sc) {
              const auto res = grid_search_adjust(policy, sc, env, grid, static_cast<std::size_t>(n), vseed,
                                                  {c.workers, c.hash});
              std::istringstream rows(format_score_table(res));
              std::string line;
              bool header = true;
              while (std::getline(rows, line)) {
                if (header) {
                  if (table.tellp() == 0) table << "regime\t" << line << '\n';
                  header = false;
                  continue;
                }
                table << label << '\t' << line << '\n';
              }
              adj[label] = Json{{"scale", res.best.scale}, {"bid", res.best.bid}, {"ask", res.best.ask}};
              const auto& best = res.cells[res.best_index].summary;
              const auto& id = res.cells[res.identity_index].summary;
              c.out << label << ": selected scale " << res.best.scale << " offsets [" << res.best.bid << ", "
                    << res.best.ask << "], validation pnl " << best.mean_pnl << " (identity " << id.mean_pnl
                    << ")\n";
            };
            if (per_regime) {
              for (std::size_t g = 0; g < scenarios.size(); ++g)
                record(regimes.regimes[g].name, std::span(&scenarios[g], 1));
            } else {
              record("all", scenarios);
            }
            man.write_artifact("finetune.tsv", table.str());
            man.write_artifact("adjust.json", Json{{"per_regime", per_regime}, {"adjust", adj}}.dump(2) + "\n");
          }};
}

Command cmd_backtest(Context& ctx) {
  const EnvConfig env = env_from(ctx.cfg);
  const RegimeConfig regimes = regimes_from(ctx.cfg);
  const ExpertSettings xs = experts_from(ctx.cfg);
  const auto n = ctx.cfg.at("backtest").at("n_episodes").get<std::int64_t>();
  if (n < 2) throw ConfigError("config: backtest.n_episodes must be >= 2");
  const bool with_experts = ctx.cfg.at("backtest").at("include_experts").get<bool>();
  const bool det = ctx.cfg.at("model").at("deterministic_prior").get<bool>();
  const fs::path ckpt = path_or_default(ctx.cfg, "checkpoint", ctx.run.out_dir / "model.ckpt");
  require_input(ckpt);
  const fs::path adj_default = ctx.run.out_dir / "adjust.json";
  const fs::path adj_path = path_or_default(ctx.cfg, "adjust", adj_default);
  const bool has_adjust = fs::exists(adj_path);
  if (!has_adjust && adj_path != adj_default) require_input(adj_path);
  return {{"backtest.tsv", "summary.tsv", "episodes.tsv"}, [=](Context& c, RunManifest& man) {
            man.add_input(ckpt);
            auto params = std::make_shared<const FlowPolicyParams>(load_checkpoint(ckpt));
            const FlowPolicy flow(params, 0, det, "Pretrained Flow Policy");
            ExpertRows ex = with_experts ? expert_rows(regimes, xs, standard_experts()) : ExpertRows{};
            std::vector<SuiteRow> rows = ex.rows;
            rows.push_back({"Pretrained Flow Policy", {&flow}});

            std::vector<std::unique_ptr<AdjustedPolicy>> tuned;
            if (has_adjust) {
              man.add_input(adj_path);
              std::ifstream in(adj_path);
              const Json aj = Json::parse(in);
              SuiteRow row{"Finetuned Flow Policy", {}};
              auto make = [&](const Json& a) {
                tuned.push_back(std::make_unique<AdjustedPolicy>(
                    flow, LinearAdjust{a.at("scale").get<double>(), a.at("bid").get<double>(),
                                       a.at("ask").get<double>()}));
                row.per_regime.push_back(tuned.back().get());
              };
              if (aj.at("per_regime").get<bool>()) {
                for (const auto& r : regimes.regimes) {
                  if (!aj.at("adjust").contains(r.name))
                    throw ConfigError("adjust file has no entry for regime " + r.name);
                  make(aj.at("adjust").at(r.name));
                }
              } else {
                make(aj.at("adjust").at("all"));
              }
              rows.push_back(std::move(row));
            }
            const std::uint64_t bseed = mix_seed(c.run.seed, static_cast<std::uint64_t>(Stream::kBacktest));
            const auto table = regime_suite(rows, regimes, env, static_cast<std::size_t>(n), bseed, {c.workers, c.hash});
            man.write_artifact("backtest.tsv", format_regime_table(table));
            man.write_artifact("summary.tsv", format_summary(table, c.run.seed, c.hash));
            // per-episode numbers of the flow policy rows
            std::ostringstream eps;
            for (std::size_t r = 0; r < table.rows.size(); ++r) {
              if (table.rows[r].find("Flow") == std::string::npos) continue;
              BacktestReport rep;
              rep.policy_id = table.rows[r];
              rep.master_seed = c.run.seed;
              rep.config_hash = c.hash;
              rep.scenarios = table.cells[r];
              std::vector<EpisodeMetrics> all;
              for (const auto& s : rep.scenarios) all.insert(all.end(), s.episodes.begin(), s.episodes.end());
              rep.aggregate = summarize(all);
              eps << format_report(rep);
            }
            man.write_artifact("episodes.tsv", eps.str());
            c.out << format_regime_table(table);
          }};
}

Command cmd_regime_suite(Context& ctx) {
  const EnvConfig env = env_from(ctx.cfg);
  const RegimeConfig regimes = regimes_from(ctx.cfg);
  const ExpertSettings xs = experts_from(ctx.cfg);
  const auto n = ctx.cfg.at("backtest").at("n_episodes").get<std::int64_t>();
  if (n < 2) throw ConfigError("config: backtest.n_episodes must be >= 2");
  const bool det = ctx.cfg.at("model").at("deterministic_prior").get<bool>();
  const auto ck = ctx.cfg.at("paths").at("checkpoint").get<std::string>();
  if (!ck.empty()) require_input(ck);
  return {{"regime_suite.tsv", "regime_summary.tsv", "regime_check.tsv"}, [=](Context& c, RunManifest& man) {
            ExpertRows ex = expert_rows(regimes, xs, standard_experts());
            std::vector<SuiteRow> rows = ex.rows;
            std::unique_ptr<FlowPolicy> flow;
            if (!ck.empty()) {
              man.add_input(ck);
              flow = std::make_unique<FlowPolicy>(std::make_shared<const FlowPolicyParams>(load_checkpoint(ck)), 0,
                                                  det, "Flow Policy");
              rows.push_back({"Flow Policy", {flow.get()}});
            }
            const std::uint64_t bseed = mix_seed(c.run.seed, static_cast<std::uint64_t>(Stream::kBacktest));
            const auto table = regime_suite(rows, regimes, env, static_cast<std::size_t>(n), bseed, {c.workers, c.hash});
            man.write_artifact("regime_suite.tsv", format_regime_table(table));
            man.write_artifact("regime_summary.tsv", format_summary(table, c.run.seed, c.hash));
            // GLFT vs AS drawdown in every regime
            std::ostringstream chk;
            chk << "regime\tglft_mdd\tas_mdd\tdiff\tstderr\tverdict\n";
            auto row_of = [&](const std::string& name) {
              return static_cast<std::size_t>(std::find(table.rows.begin(), table.rows.end(), name) - table.rows.begin());
            };
            const std::size_t gi = row_of("GLFT Expert"), ai = row_of("AS Expert");
            for (std::size_t g = 0; g < table.regimes.size(); ++g) {
              std::vector<double> diff;
              for (std::size_t e = 0; e < table.cells[gi][g].episodes.size(); ++e)
                diff.push_back(table.cells[gi][g].episodes[e].mdd - table.cells[ai][g].episodes[e].mdd);
              const double m = mean_of(diff);
              const double se = sample_std(diff) / std::sqrt(static_cast<double>(diff.size()));
              const char* verdict = m < 0 ? (-m > se ? "glft-lower" : "flag-within-1se")
                                          : (m > se ? "as-lower" : "flag-within-1se");
              chk << table.regimes[g] << '\t' << num(table.cells[gi][g].summary.mean_mdd) << '\t'
                  << num(table.cells[ai][g].summary.mean_mdd) << '\t' << num(m) << '\t' << num(se) << '\t'
                  << verdict << '\n';
            }
            man.write_artifact("regime_check.tsv", chk.str());
            c.out << format_regime_table(table) << '\n' << chk.str();
          }};
}

Command cmd_scaling(Context& ctx) {
  const DataConfig d = data_from(ctx.cfg);
  const ModelConfig model = model_from(ctx.cfg);
  const TrainConfig train = train_from(ctx.cfg, ctx.run.seed);
  const RegimeConfig regimes = regimes_from(ctx.cfg);
  const auto subsets = scaling_subsets_from(ctx.cfg);
  const auto n = ctx.cfg.at("scaling").at("eval_episodes").get<std::int64_t>();
  if (n < 2) throw ConfigError("config: scaling.eval_episodes must be >= 2");
  return {{"scaling.tsv"}, [=](Context& c, RunManifest& man) {
            const auto rows = scaling_study(d, subsets, model, train, regimes, static_cast<std::size_t>(n),
                                            c.run.seed, c.workers);
            man.write_artifact("scaling.tsv", format_scaling(rows));
            c.out << format_scaling(rows);
          }};
}

Command cmd_ablation(Context& ctx) {
  DataConfig d = data_from(ctx.cfg);
  d.grid = regime_grid_from(ctx.cfg);
  const auto n_data = ctx.cfg.at("ablation").at("n_episodes").get<std::int64_t>();
  const auto n_eval = ctx.cfg.at("ablation").at("eval_episodes").get<std::int64_t>();
  if (n_data < 10) throw ConfigError("config: ablation.n_episodes must be >= 10 (validation split)");
  if (n_eval < 2) throw ConfigError("config: ablation.eval_episodes must be >= 2");
  d.n_episodes = static_cast<std::size_t>(n_data);
  const ModelConfig model = model_from(ctx.cfg);
  const TrainConfig train = train_from(ctx.cfg, ctx.run.seed);
  const RegimeConfig regimes = regimes_from(ctx.cfg);
  return {{"ablation.tsv"}, [=](Context& c, RunManifest& man) {
            const auto res = ablation_study(d, model, train, regimes, static_cast<std::size_t>(n_eval), c.run.seed,
                                            c.workers);
            man.write_artifact("ablation.tsv", format_ablation(res));
            c.out << format_ablation(res);
          }};
}

int cmd_inspect(const RunConfig& run, std::ostream& out) {
  if (run.positional.empty()) throw UsageError("inspect: missing file argument");
  for (const auto& f : run.positional) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw ConfigError("inspect: cannot open " + f);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    out << f << ":\n";
    if (bytes.rfind(std::string("FMMDSET\0", 8), 0) == 0) {
      const Dataset ds = decode_dataset(bytes);
      std::size_t val = 0;
      for (const auto& r : ds.records) val += is_validation_episode(r.episode_id);
      out << "  kind          dataset v" << kDatasetFormatVersion << "\n"
          << "  records       " << ds.records.size() << " (" << ds.records.size() - val << " train, " << val
          << " validation)\n"
          << "  schema        window[" << ds.t_obs << "x" << kWindowFeatures << "] actions[" << ds.t_pred << "x"
          << kActionDim << "] features " << NormStats::kManifest << "\n"
          << "  stats_hash    " << hex64(ds.stats.fingerprint()) << "\n"
          << "  master_seed   " << ds.master_seed << "\n"
          << "  config_hash   " << hex64(ds.config_hash) << "\n"
          << "  checksum      " << hex32(crc32_of(bytes)) << "\n";
    } else if (bytes.rfind(std::string("FMMCKPT\0", 8), 0) == 0) {
      const FlowPolicyParams p = decode_checkpoint(bytes);
      out << "  kind          checkpoint v" << kCheckpointFormatVersion << "\n  layers       ";
      for (auto d : p.layer_dims) out << ' ' << d;
      out << "\n  parameters    " << p.theta.size() << "\n"
          << "  t_obs/t_pred  " << p.t_obs << "/" << p.t_pred << "\n"
          << "  ode_steps     " << p.n_ode_steps << "\n"
          << "  activation    " << p.activation << "\n"
          << "  stats_hash    " << hex64(p.stats.fingerprint()) << "\n"
          << "  checksum      " << hex32(crc32_of(bytes)) << "\n";
    } else {
      throw FormatError("inspect: " + f + " is neither a dataset nor a checkpoint");
    }
  }
  return kOk;
}

}  // namespace

RunConfig parse_and_validate(const std::vector<std::string>& args) {
  CLI::App app{"flowmm: market-making simulation, imitation and backtesting", "flowmm"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig rc;
  std::string config, out = ".";
  std::size_t workers = 0;
  app.add_option("--config", config, "Config file (JSON, comments allowed)");
  app.add_option("--seed", rc.seed, "Master seed (unsigned 64-bit)");
  app.add_option("--out", out, "Output directory");
  app.add_option("--set", rc.overrides, "Override a config key: section.key=value")->take_all();
  app.add_option("--workers", workers, "Worker threads (overrides runtime.workers)");
  static const std::map<std::string, std::string> about{
      {"simulate", "Run an expert on the configured market and dump trajectories"},
      {"gen-data", "Collect expert demonstrations into a dataset"},
      {"train", "Train a flow policy on a dataset"},
      {"finetune", "Grid-search a linear quote adjustment on validation episodes"},
      {"backtest", "Evaluate experts and flow policies across regimes"},
      {"regime-suite", "Expert comparison across regimes with the GLFT/AS drawdown check"},
      {"scaling-study", "Train on growing expert pools and evaluate"},
      {"ablation", "Train on random, AS and GLFT-drift labels and compare"},
      {"inspect", "Print the header of a dataset or checkpoint"}};
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name, about.at(name));
    if (name == "inspect") sub->add_option("files", rc.positional, "Dataset or checkpoint files")->required();
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  rc.command = app.get_subcommands().front()->get_name();
  rc.out_dir = out;
  if (workers > 0) rc.workers = workers;
  if (rc.command != "inspect") {
    if (config.empty()) throw UsageError(rc.command + ": --config is required");
    rc.config_path = config;
  }
  return rc;
}

int dispatch(const RunConfig& run, std::ostream& out, std::ostream& err) {
  if (run.command == "inspect") return cmd_inspect(run, out);

  // Validation phase: nothing touches the filesystem.
  Json cfg = load_config(run.config_path);
  apply_overrides(cfg, run.overrides);
  Context ctx{run, cfg, config_hash(cfg), 1, out};
  const auto w = cfg.at("runtime").at("workers").get<std::int64_t>();
  if (w < 1) throw ConfigError("config: runtime.workers must be >= 1");
  ctx.workers = run.workers.value_or(static_cast<std::size_t>(w));

  Command cmd;
  if (run.command == "simulate") cmd = cmd_simulate(ctx);
  else if (run.command == "gen-data") cmd = cmd_gen_data(ctx);
  else if (run.command == "train") cmd = cmd_train(ctx);
  else if (run.command == "finetune") cmd = cmd_finetune(ctx);
  else if (run.command == "backtest") cmd = cmd_backtest(ctx);
  else if (run.command == "regime-suite") cmd = cmd_regime_suite(ctx);
  else if (run.command == "scaling-study") cmd = cmd_scaling(ctx);
  else if (run.command == "ablation") cmd = cmd_ablation(ctx);
  else throw UsageError("unknown command '" + run.command + "'");

  const std::string snapshot = "config-" + run.command + ".json";
  cmd.artifacts.push_back(snapshot);
  for (const auto& a : cmd.artifacts)
    if (fs::exists(run.out_dir / a))
      throw ConfigError("refusing to overwrite existing artifact " + (run.out_dir / a).string());
  fs::create_directories(run.out_dir);

  RunManifest man(run.out_dir, run.command, run.seed, ctx.hash);
  try {
    man.write_artifact(snapshot, cfg.dump(2) + "\n");
    cmd.run(ctx, man);
  } catch (const std::exception& e) {
    man.finish_failed(e.what());
    err << "flowmm " << run.command << ": " << e.what() << "\n";
    return kRuntime;
  }
  man.finish_ok();
  return kOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig rc = parse_and_validate(args);
    return dispatch(rc, out, err);
  } catch (const HelpRequested& h) {
    out << h.what();
    return kOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace flowmm::cli
