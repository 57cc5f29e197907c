#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "flowmm/backtest.hpp"
#include "flowmm/cli/commands.hpp"
#include "flowmm/dataset.hpp"
#include "flowmm/errors.hpp"
#include "flowmm/experts.hpp"
#include "flowmm/flow_policy.hpp"
#include "flowmm/market.hpp"
#include "flowmm/metrics.hpp"
#include "flowmm/rng.hpp"

namespace py = pybind11;
using namespace flowmm;

namespace {

Observation make_obs(std::size_t step, int inventory) {
  Observation o;
  o.step = step;
  o.inventory = inventory;
  return o;
}

py::tuple quotes(const QuoteAction& q) { return py::make_tuple(q.delta_bid, q.delta_ask); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Flow-matching market-making core";

  auto base = py::register_exception<Error>(m, "FlowmmError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());

  py::class_<MarketParams>(m, "MarketParams")
      .def(py::init<>())
      .def_readwrite("mu", &MarketParams::mu)
      .def_readwrite("sigma", &MarketParams::sigma)
      .def_readwrite("hurst", &MarketParams::hurst)
      .def_readwrite("jump_intensity", &MarketParams::jump_intensity)
      .def_readwrite("jump_mean", &MarketParams::jump_mean)
      .def_readwrite("jump_std", &MarketParams::jump_std)
      .def_readwrite("base_buy", &MarketParams::base_buy)
      .def_readwrite("base_sell", &MarketParams::base_sell)
      .def_readwrite("alpha_bb", &MarketParams::alpha_bb)
      .def_readwrite("alpha_aa", &MarketParams::alpha_aa)
      .def_readwrite("alpha_ba", &MarketParams::alpha_ba)
      .def_readwrite("alpha_ab", &MarketParams::alpha_ab)
      .def_readwrite("beta", &MarketParams::beta)
      .def_readwrite("fill_decay", &MarketParams::fill_decay)
      .def_readwrite("base_fill", &MarketParams::base_fill)
      .def_readwrite("s0", &MarketParams::s0)
      .def_readwrite("dt", &MarketParams::dt)
      .def_readwrite("n_steps", &MarketParams::n_steps)
      .def("horizon", &MarketParams::horizon)
      .def("branching_radius", &MarketParams::branching_radius)
      .def("validate", &MarketParams::validate);

  py::class_<EnvConfig>(m, "EnvConfig")
      .def(py::init<>())
      .def_readwrite("q_max", &EnvConfig::q_max)
      .def_readwrite("inv_penalty", &EnvConfig::inv_penalty)
      .def_readwrite("terminal_penalty", &EnvConfig::terminal_penalty)
      .def_readwrite("initial_cash", &EnvConfig::initial_cash);

  py::class_<ExpertConfig>(m, "ExpertConfig")
      .def(py::init<>())
      .def_static("from_market", &ExpertConfig::from_market, py::arg("market"), py::arg("gamma") = 0.1)
      .def_readwrite("gamma", &ExpertConfig::gamma)
      .def_readwrite("k", &ExpertConfig::k)
      .def_readwrite("A", &ExpertConfig::A)
      .def_readwrite("horizon_T", &ExpertConfig::horizon_T)
      .def_readwrite("dt", &ExpertConfig::dt)
      .def_readwrite("drift_mu", &ExpertConfig::drift_mu)
      .def_readwrite("sigma", &ExpertConfig::sigma)
      .def_readwrite("invert_inventory_skew", &ExpertConfig::invert_inventory_skew);

  // market
  m.def("episode_seed", &episode_seed, py::arg("master"), py::arg("scenario"), py::arg("episode"));
  m.def(
      "fbm_increments",
      [](double hurst, std::size_t n, double dt, std::uint64_t seed) {
        Rng rng = make_rng(seed);
        return gen_fbm_increments(hurst, n, dt, rng);
      },
      py::arg("hurst"), py::arg("n"), py::arg("dt"), py::arg("seed"));
  m.def("fbm_covariance", &fbm_covariance, py::arg("hurst"), py::arg("t"), py::arg("s"));
  m.def(
      "simulate_midprice",
      [](const MarketParams& p, std::uint64_t seed) {
        Rng rng = make_rng(seed);
        return simulate_midprice(p, rng);
      },
      py::arg("market"), py::arg("seed"));
  m.def(
      "simulate_hawkes",
      [](const MarketParams& p, double horizon, std::uint64_t seed) {
        Rng rng = make_rng(seed);
        const auto ev = simulate_hawkes(p, horizon, rng);
        return py::make_tuple(ev.buys, ev.sells);
      },
      py::arg("market"), py::arg("horizon"), py::arg("seed"));

  // experts
  m.def(
      "as_quotes", [](std::size_t step, int q, const ExpertConfig& c) { return quotes(as_quotes(make_obs(step, q), c)); },
      py::arg("step"), py::arg("inventory"), py::arg("config"));
  m.def(
      "glft_quotes",
      [](std::size_t step, int q, const ExpertConfig& c) { return quotes(glft_quotes(make_obs(step, q), c)); },
      py::arg("step"), py::arg("inventory"), py::arg("config"));
  m.def(
      "glft_drift_quotes",
      [](std::size_t step, int q, const ExpertConfig& c) { return quotes(glft_drift_quotes(make_obs(step, q), c)); },
      py::arg("step"), py::arg("inventory"), py::arg("config"));

  // episodes
  m.def(
      "run_expert_episode",
      [](const std::string& expert, const MarketParams& p, const EnvConfig& env, const ExpertConfig& c,
         std::uint64_t seed) {
        const ExpertPolicy policy(parse_expert(expert), c);
        const auto r = run_episode(p, env, policy, seed);
        py::dict d;
        d["pnl"] = r.pnl();
        d["objective"] = r.objective;
        d["final_inventory"] = r.final_inventory;
        d["bid_fills"] = r.fills.bid;
        d["ask_fills"] = r.fills.ask;
        d["value_series"] = r.value_series;
        return d;
      },
      py::arg("expert"), py::arg("market"), py::arg("env"), py::arg("config"), py::arg("seed"));

  // metrics
  m.def("cumulative_return", [](const std::vector<double>& r) { return cumulative_return(r); }, py::arg("returns"));
  m.def("sharpe_ratio", [](const std::vector<double>& r) { return sharpe_ratio(r); }, py::arg("excess_returns"));
  m.def("max_drawdown", [](const std::vector<double>& v) { return max_drawdown(v); }, py::arg("values"));

  // artifacts
  m.def(
      "dataset_info",
      [](const std::filesystem::path& path) {
        const Dataset ds = read_dataset(path);
        py::dict d;
        d["records"] = ds.records.size();
        d["t_obs"] = ds.t_obs;
        d["t_pred"] = ds.t_pred;
        d["master_seed"] = ds.master_seed;
        return d;
      },
      py::arg("path"));

  py::class_<FlowPolicyParams, std::shared_ptr<FlowPolicyParams>>(m, "FlowPolicyParams")
      .def_static("load", [](const std::filesystem::path& p) { return std::make_shared<FlowPolicyParams>(load_checkpoint(p)); })
      .def_readonly("t_obs", &FlowPolicyParams::t_obs)
      .def_readonly("t_pred", &FlowPolicyParams::t_pred)
      .def_readonly("layer_dims", &FlowPolicyParams::layer_dims)
      .def("save", [](const FlowPolicyParams& p, const std::filesystem::path& path) { save_checkpoint(p, path); })
      .def(
          "receding_step",
          [](const FlowPolicyParams& p, const std::vector<double>& window, std::size_t n_ode_steps, std::uint64_t seed,
             bool deterministic_prior) {
            Rng rng = make_rng(seed);
            return quotes(receding_step(p, window, n_ode_steps, rng, deterministic_prior));
          },
          py::arg("window"), py::arg("n_ode_steps") = 16, py::arg("seed") = 0, py::arg("deterministic_prior") = false);
  m.def(
      "init_flow_params",
      [](const std::vector<std::size_t>& hidden, std::uint32_t t_obs, std::uint32_t t_pred, std::uint64_t seed) {
        ModelConfig mc;
        mc.hidden = hidden;
        mc.t_obs = t_obs;
        mc.t_pred = t_pred;
        return std::make_shared<FlowPolicyParams>(init_flow_params(mc, NormStats{}, seed));
      },
      py::arg("hidden") = std::vector<std::size_t>{128, 128, 128}, py::arg("t_obs") = 8, py::arg("t_pred") = 4,
      py::arg("seed") = 0);

  // command line
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one command; returns (exit_code, stdout, stderr).");
  m.attr("window_features") = kWindowFeatures;
}
