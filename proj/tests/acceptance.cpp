// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 on success).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flowmm/backtest.hpp"
#include "flowmm/checksum.hpp"
#include "flowmm/cli/commands.hpp"
#include "flowmm/experts.hpp"
#include "flowmm/finetune.hpp"
#include "flowmm/flow_policy.hpp"
#include "flowmm/market.hpp"
#include "flowmm/metrics.hpp"
#include "flowmm/studies.hpp"
#include "oracles.hpp"

using namespace flowmm;
namespace fs = std::filesystem;

namespace {

enum class Verdict { kPass, kFail, kFlag };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---- 1: fBm covariance and H=0.5 lag-1 autocorrelation
Outcome fbm_check() {
  const std::size_t n = 64, n_paths = 10000;
  const double dt = 1.0 / static_cast<double>(n);
  std::mt19937_64 pick(2024);
  std::uniform_int_distribution<std::size_t> idx(0, n - 1);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  while (pairs.size() < 20) pairs.emplace_back(idx(pick), idx(pick));

  std::ostringstream detail;
  bool ok = true;
  for (double h : {0.2, 0.5, 0.8}) {
    Rng rng(static_cast<std::uint64_t>(h * 1000) + 17);
    std::vector<double> sums(n_paths * n);
    double lag_num = 0.0, lag_den = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      const auto inc = gen_fbm_increments(h, n, dt, rng);
      std::partial_sum(inc.begin(), inc.end(), sums.begin() + static_cast<std::ptrdiff_t>(p * n));
      for (std::size_t i = 0; i < n; ++i) {
        lag_den += inc[i] * inc[i];
        if (i + 1 < n) lag_num += inc[i] * inc[i + 1];
      }
    }
    double worst = 0.0;  // largest |error| in standard errors
    for (auto [i, j] : pairs) {
      double m = 0.0, m2 = 0.0;
      for (std::size_t p = 0; p < n_paths; ++p) {
        const double x = sums[p * n + i] * sums[p * n + j];
        m += x;
        m2 += x * x;
      }
      m /= n_paths;
      const double var = (m2 - n_paths * m * m) / (n_paths - 1);
      const double se = std::sqrt(var / n_paths);
      const double want = oracle::fbm_cov(h, (i + 1) * dt, (j + 1) * dt);
      worst = std::max(worst, std::abs(m - want) / se);
    }
    ok = ok && worst < 3.0;
    detail << "H=" << h << " max|z|=" << fmt("%.2f", worst) << "; ";
    if (h == 0.5) {
      // increments are centred, so the raw ratio is the lag-1 autocorrelation
      const double rho = lag_num / lag_den * static_cast<double>(n) / static_cast<double>(n - 1);
      ok = ok && std::abs(rho) < 0.03;
      detail << "rho1=" << fmt("%.4f", rho) << "; ";
    }
  }
  return {ok ? Verdict::kPass : Verdict::kFail, detail.str()};
}

// ---- 2: Hawkes Poisson reduction and stationary rate
Outcome hawkes_check() {
  MarketParams p;
  Rng rng(77);
  std::vector<int> counts;
  for (int r = 0; r < 10000; ++r) counts.push_back(static_cast<int>(simulate_hawkes(p, 1.0, rng).buys.size()));
  const double pval = oracle::poisson_gof_pvalue(counts, p.base_buy);

  p.alpha_bb = 2.0;  // branching ratio 0.4
  const double want = p.base_buy / (1.0 - p.alpha_bb / p.beta);
  const double horizon = 50.0;
  std::size_t events = 0;
  const int runs = 200;
  for (int r = 0; r < runs; ++r) events += simulate_hawkes(p, horizon, rng).buys.size();
  const double rate = static_cast<double>(events) / (horizon * runs);
  const double rel = std::abs(rate / want - 1.0);
  const bool ok = pval > 0.01 && rel < 0.05;
  return {ok ? Verdict::kPass : Verdict::kFail, "GOF p=" + fmt("%.3f", pval) + "; rate " + fmt("%.3f", rate) +
                                                    " vs " + fmt("%.3f", want) + " (rel " + fmt("%.4f", rel) + ")"};
}

// ---- 3: expert formulas against the oracle on a 50-point lattice
Outcome expert_check() {
  double worst = 0.0;
  const auto rel = [&](double got, double want) {
    worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-300));
  };
  const double gammas[] = {0.05, 0.1, 0.5, 1.0, 2.0};
  const double sigmas[] = {0.02, 0.1, 0.25, 0.5, 1.0};
  const double ks[] = {0.5, 1.5};
  std::size_t points = 0;
  for (double g : gammas)
    for (double s : sigmas)
      for (double k : ks) {
        if (points == 50) break;
        ++points;
        ExpertConfig c;
        c.gamma = g;
        c.sigma = s;
        c.k = k;
        c.A = 10.0 + 10.0 * static_cast<double>(points % 4);
        c.drift_mu = 0.01 * static_cast<double>(points % 5) - 0.02;
        c.horizon_T = 1.0;
        c.dt = 0.01;
        const int q = static_cast<int>(points % 7) - 3;
        Observation o{points % 100, 100.0, q, 0.0, 0.0};
        const double tau = c.horizon_T - static_cast<double>(o.step) * c.dt;
        const auto a = as_quotes_raw(o, c);
        const auto wa = oracle::as(g, s, tau, k, q);
        const auto b = glft_quotes_raw(o, c);
        const auto wb = oracle::glft(g, k, c.A, s, q);
        const auto d = glft_drift_quotes_raw(o, c);
        const auto wd = oracle::glft_drift(g, k, c.A, s, c.drift_mu, q);
        rel(a.delta_bid, wa.bid), rel(a.delta_ask, wa.ask);
        rel(b.delta_bid, wb.bid), rel(b.delta_ask, wb.ask);
        rel(d.delta_bid, wd.bid), rel(d.delta_ask, wd.ask);
        // clamped quotes are the clamped oracle values
        const auto ca = glft_drift_quotes(o, c);
        if (ca.delta_bid != std::max(0.0, d.delta_bid) || ca.delta_ask != std::max(0.0, d.delta_ask)) worst = 1.0;
      }
  const bool ok = points == 50 && worst < 1e-10;
  return {ok ? Verdict::kPass : Verdict::kFail,
          std::to_string(points) + " points, max rel err " + fmt("%.2e", worst)};
}

// ---- 4: analytic flow-matching gradient vs central differences
Outcome gradient_check() {
  const ModelConfig model;  // default sizes
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto p = init_flow_params(model, NormStats{}, seed);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud;
    for (Eigen::Index i = 0; i < p.theta.size(); ++i) p.theta(i) += 0.1 * nd(rng);
    FmBatch b;
    const auto wd = static_cast<Eigen::Index>(p.window_dim()), ad = static_cast<Eigen::Index>(p.action_dim());
    b.windows = Eigen::MatrixXd::NullaryExpr(wd, 32, [&] { return nd(rng); });
    b.targets = Eigen::MatrixXd::NullaryExpr(ad, 32, [&] { return nd(rng); });
    b.noise = Eigen::MatrixXd::NullaryExpr(ad, 32, [&] { return nd(rng); });
    b.times = Eigen::VectorXd::NullaryExpr(32, [&] { return ud(rng); });
    const auto lg = fm_loss_and_grad(p, b);
    std::uniform_int_distribution<Eigen::Index> pick(0, p.theta.size() - 1);
    for (int k = 0; k < 20; ++k) {
      const Eigen::Index i = pick(rng);
      auto q = p;
      const double h = 1e-5;
      q.theta(i) = p.theta(i) + h;
      const double up = fm_loss(q, b);
      q.theta(i) = p.theta(i) - h;
      const double dn = fm_loss(q, b);
      const double fd = (up - dn) / (2 * h);
      worst = std::max(worst, std::abs(fd - lg.grad(i)) / std::max(1e-8, std::abs(fd) + std::abs(lg.grad(i))));
    }
  }
  return {worst < 1e-4 ? Verdict::kPass : Verdict::kFail, "100 coordinates, max rel err " + fmt("%.2e", worst)};
}

// ---- 5: linear-map synthetic task at default sizes
Outcome synthetic_check() {
  const ModelConfig model;
  const auto train = oracle::linear_task(20000, model.t_obs, model.t_pred, 1);
  const auto test = oracle::linear_task(500, model.t_obs, model.t_pred, 2);
  TrainConfig tc;
  tc.max_steps = 8000;
  tc.learning_rate = 3e-3;
  tc.cosine_decay = true;
  tc.seed = 5;
  const auto res = train_policy(train, compute_norm_stats(train), model, tc);
  Rng rng(3);
  double se = 0.0;
  for (const auto& r : test) {
    const auto seq = infer_action_sequence(res.params, r.window, 32, rng);
    for (std::size_t i = 0; i < seq.size(); ++i)
      se += std::pow(seq[i].delta_bid - r.actions[2 * i], 2) + std::pow(seq[i].delta_ask - r.actions[2 * i + 1], 2);
  }
  const double mse = se / static_cast<double>(test.size() * model.t_pred * kActionDim);
  return {mse < 1e-3 ? Verdict::kPass : Verdict::kFail, "held-out MSE " + fmt("%.3e", mse) + " at N=32"};
}

RegimeConfig default_regimes() { return RegimeConfig{}; }

GridConfig regime_grid(const RegimeConfig& r) {
  GridConfig g;
  g.base = r.base;
  g.volatility = {0.25, 0.02};
  g.arrival = {50.0, 25.0};
  g.hurst = {r.hurst};
  g.drift = {r.drift};
  g.jumps = {{0.0, 0.0, 0.0}};
  g.excitation = {{0.0, 0.0}};
  return g;
}

// ---- 6: GLFT-drift imitation vs random-label policy; keeps the learner for 7
Outcome imitation_check(std::shared_ptr<const FlowPolicyParams>& learned) {
  DataConfig d;
  d.grid = regime_grid(default_regimes());
  d.n_episodes = 20;
  const auto r = ablation_study(d, ModelConfig{}, TrainConfig{}, default_regimes(), 2, 31);
  learned = r.params[2];
  const double ratio = r.random_baseline_mse[2] / r.mse[2];
  return {ratio >= 10.0 ? Verdict::kPass : Verdict::kFail,
          "glft-drift MSE " + fmt("%.3e", r.mse[2]) + ", random-label " + fmt("%.3e", r.random_baseline_mse[2]) +
              ", ratio " + fmt("%.1f", ratio)};
}

// ---- 7: fine-tuning never loses to the pretrained policy
Outcome finetune_check(const std::shared_ptr<const FlowPolicyParams>& params) {
  const FlowPolicy policy(params);
  const auto scenarios = regime_scenarios(default_regimes());
  EnvConfig env;
  AdjustGrid g;
  g.scales = {0.9, 1.0, 1.1};
  g.bid_offsets = {-0.2, 0.0, 0.2, 0.4};
  g.ask_offsets = {-0.2, 0.0, 0.2, 0.4};
  const std::uint64_t seed = 41;
  const std::size_t n = 8;
  const auto r = grid_search_adjust(policy, scenarios, env, g, n, seed);
  const double best = r.cells[r.best_index].summary.mean_pnl;
  const double pretrained = evaluate_policy(policy, scenarios, env, n, seed).aggregate.mean_pnl;
  const bool ok = best >= pretrained && r.cells[r.identity_index].summary.mean_pnl == pretrained;
  return {ok ? Verdict::kPass : Verdict::kFail,
          std::to_string(r.cells.size()) + " cells, best " + fmt("%.4f", best) + " (scale " +
              fmt("%.2f", r.best.scale) + " bid " + fmt("%+.2f", r.best.bid) + " ask " +
              fmt("%+.2f", r.best.ask) + ") vs pretrained " + fmt("%.4f", pretrained)};
}

// ---- 8: metric oracles
Outcome metrics_check() {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> len(1, 200);
  std::normal_distribution<double> nd(0.0, 0.05);
  std::size_t mismatches = 0;
  for (int s = 0; s < 1000; ++s) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    double x = 100.0;
    for (auto& e : v) e = (x *= std::exp(nd(rng)));
    if (max_drawdown(v) != oracle::brute_mdd(v)) ++mismatches;
  }
  const std::vector<double> r1{0.10, -0.05}, r2{0.02, 0.00};
  const double cr = cumulative_return(r1), sr = sharpe_ratio(r2);
  const bool ok = mismatches == 0 && std::abs(cr - 0.045) < 1e-5 && std::abs(sr - 0.70711) < 1e-5 &&
                  cumulative_return({}) == 0.0;
  return {ok ? Verdict::kPass : Verdict::kFail, "mdd mismatches " + std::to_string(mismatches) + "/1000; CR " +
                                                    fmt("%.6f", cr) + "; SR " + fmt("%.6f", sr)};
}

// ---- 9: GLFT drawdown below AS in the high-volatility regimes
Outcome regime_check() {
  RegimeConfig rc;
  rc.regimes = {{"HH", 0.25, 50.0}, {"HL", 0.25, 25.0}};
  const auto scenarios = regime_scenarios(rc);
  EnvConfig env;
  std::vector<std::unique_ptr<ExpertPolicy>> as, glft;
  SuiteRow as_row{"AS Expert", {}}, glft_row{"GLFT Expert", {}};
  for (const auto& sc : scenarios) {
    const auto cfg = ExpertConfig::from_market(sc.params, 0.1);
    as.push_back(std::make_unique<ExpertPolicy>(ExpertKind::kAS, cfg));
    glft.push_back(std::make_unique<ExpertPolicy>(ExpertKind::kGLFT, cfg));
    as_row.per_regime.push_back(as.back().get());
    glft_row.per_regime.push_back(glft.back().get());
  }
  const std::vector<SuiteRow> rows{as_row, glft_row};
  const auto table = regime_suite(rows, rc, env, 200, 9);
  Verdict v = Verdict::kPass;
  std::ostringstream detail;
  for (std::size_t g = 0; g < table.regimes.size(); ++g) {
    std::vector<double> diff;
    for (std::size_t e = 0; e < table.cells[1][g].episodes.size(); ++e)
      diff.push_back(table.cells[1][g].episodes[e].mdd - table.cells[0][g].episodes[e].mdd);
    const double m = mean_of(diff);
    const double se = sample_std(diff) / std::sqrt(static_cast<double>(diff.size()));
    if (std::abs(m) <= se) v = (v == Verdict::kFail) ? v : Verdict::kFlag;
    else if (m > 0) v = Verdict::kFail;
    detail << table.regimes[g] << " GLFT " << fmt("%.5f", table.cells[1][g].summary.mean_mdd) << " vs AS "
           << fmt("%.5f", table.cells[0][g].summary.mean_mdd) << " (diff " << fmt("%.5f", m) << ", se "
           << fmt("%.5f", se) << "); ";
  }
  return {v, detail.str()};
}

// ---- 10: pipeline rerun gives identical artifacts
Outcome determinism_check() {
  const fs::path root = fs::temp_directory_path() / "flowmm_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "small.json";
  std::ofstream(cfg) << R"({
    "grid": {"volatility": [0.1, 0.25], "arrival": [25.0, 50.0], "hurst": [0.5], "drift": [0.0],
             "jumps": [[0.0, 0.0, 0.0]], "excitation": [[0.0, 0.0], [2.0, 1.0]]},
    "experts": {"n_eval_episodes": 3},
    "dataset": {"n_episodes": 10},
    "model": {"hidden": [32, 32]},
    "train": {"max_steps": 100, "batch_size": 64},
    "finetune": {"scales": [0.9, 1.0], "bid_offsets": [0.0, 0.2], "ask_offsets": [0.0, 0.2], "n_episodes": 3},
    "backtest": {"n_episodes": 5},
    "runtime": {"workers": 2}
  })";
  std::ostringstream sink;
  for (const char* run : {"a", "b"})
    for (const char* cmd : {"gen-data", "train", "finetune", "backtest"}) {
      const int code = cli::run_cli({cmd, "--config", cfg.string(), "--seed", "123", "--out", (root / run).string()},
                                    sink, sink);
      if (code != 0) return {Verdict::kFail, std::string(cmd) + " exited " + std::to_string(code)};
    }
  std::size_t files = 0, diffs = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    ++files;
    const fs::path other = root / "b" / e.path().filename();
    if (!fs::exists(other) || file_crc32(e.path()) != file_crc32(other)) ++diffs;
  }
  fs::remove_all(root);
  return {diffs == 0 && files >= 12 ? Verdict::kPass : Verdict::kFail,
          std::to_string(files) + " artifacts compared, " + std::to_string(diffs) + " differ"};
}

// ---- 11: receding-step latency at default sizes
Outcome latency_check() {
  const ModelConfig model;
  const auto p = init_flow_params(model, NormStats{}, 1);
  std::vector<double> window(model.t_obs * kWindowFeatures, 0.1);
  Rng rng(2);
  std::vector<double> ms;
  for (int i = 0; i < 520; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto q = receding_step(p, window, model.n_ode_steps, rng);
    const auto t1 = std::chrono::steady_clock::now();
    window[0] += q.delta_bid * 1e-9;  // keep the call observable
    if (i >= 20) ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::nth_element(ms.begin(), ms.begin() + static_cast<std::ptrdiff_t>(ms.size() / 2), ms.end());
  const double median = ms[ms.size() / 2];
  return {median < 5.0 ? Verdict::kPass : Verdict::kFail, "median " + fmt("%.3f", median) + " ms over 500 calls"};
}

}  // namespace

int main() {
  std::shared_ptr<const FlowPolicyParams> learned;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"fbm-covariance", fbm_check},
      {"hawkes-process", hawkes_check},
      {"expert-formulas", expert_check},
      {"gradient-check", gradient_check},
      {"synthetic-imitation", synthetic_check},
      {"expert-imitation", [&] { return imitation_check(learned); }},
      {"finetune-guarantee", [&] { return finetune_check(learned); }},
      {"metric-oracles", metrics_check},
      {"regime-direction", regime_check},
      {"determinism", determinism_check},
      {"inference-latency", latency_check},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Verdict::kFail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = o.verdict == Verdict::kPass ? "PASS" : o.verdict == Verdict::kFlag ? "FLAG" : "FAIL";
    if (o.verdict == Verdict::kFail) ++failed;
    std::printf("[%s] %2zu %-20s %s [%.1fs]\n", tag, i + 1, criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed;
}
