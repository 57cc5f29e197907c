#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "flowmm/errors.hpp"
#include "flowmm/flow_policy.hpp"
#include "oracles.hpp"

using namespace flowmm;

namespace {

NormStats unit_stats() { return NormStats{}; }

ModelConfig small_model(std::uint32_t t_obs = 2, std::uint32_t t_pred = 2) {
  ModelConfig m;
  m.hidden = {16, 12};
  m.t_obs = t_obs;
  m.t_pred = t_pred;
  return m;
}

FmBatch random_batch(const FlowPolicyParams& p, std::size_t B, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  FmBatch b;
  const auto wd = static_cast<Eigen::Index>(p.window_dim()), ad = static_cast<Eigen::Index>(p.action_dim());
  const auto n = static_cast<Eigen::Index>(B);
  b.windows = Eigen::MatrixXd::NullaryExpr(wd, n, [&] { return nd(rng); });
  b.targets = Eigen::MatrixXd::NullaryExpr(ad, n, [&] { return nd(rng); });
  b.noise = Eigen::MatrixXd::NullaryExpr(ad, n, [&] { return nd(rng); });
  b.times = Eigen::VectorXd::NullaryExpr(n, [&] { return ud(rng); });
  return b;
}

/// Single linear layer with zero weights and bias c: v(a, t | O) = c.
FlowPolicyParams constant_velocity(const std::vector<double>& c, std::uint32_t t_obs, NormStats stats = {}) {
  FlowPolicyParams p;
  p.t_obs = t_obs;
  p.t_pred = static_cast<std::uint32_t>(c.size() / 2);
  p.layer_dims = {t_obs * kWindowFeatures + c.size() + 1, c.size()};
  p.theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count(p.layer_dims)));
  for (std::size_t i = 0; i < c.size(); ++i) p.bias(0)(static_cast<Eigen::Index>(i)) = c[i];
  p.stats = stats;
  return p;
}

}  // namespace

TEST_CASE("interpolate_path") {
  const std::vector<double> a0{0, 0}, a1{1, 2};
  const auto mid = interpolate_path(a0, a1, 0.5);
  CHECK(mid.a_t == std::vector<double>{0.5, 1.0});
  CHECK(mid.u == std::vector<double>{1, 2});
  const std::vector<double> x{0.3, -1.7}, y{2.2, 0.4};
  CHECK(interpolate_path(x, y, 0.0).a_t == x);
  CHECK(interpolate_path(x, y, 1.0).a_t == y);
  CHECK(interpolate_path(x, y, 0.2).u == interpolate_path(x, y, 0.9).u);
  CHECK_THROWS_AS(interpolate_path(x, std::vector<double>{1.0}, 0.5), PreconditionError);
}

TEST_CASE("params: shapes and init") {
  const auto p = init_flow_params(small_model(), unit_stats(), 1);
  CHECK(p.input_dim() == 2 * 5 + 2 * 2 + 1);
  CHECK(p.output_dim() == 4);
  CHECK(p.layer_dims == std::vector<std::size_t>{15, 16, 12, 4});
  CHECK(static_cast<std::size_t>(p.theta.size()) == 15 * 16 + 16 + 16 * 12 + 12 + 12 * 4 + 4);
  const double lim0 = std::sqrt(6.0 / (15 + 16));
  CHECK(p.weight(0).cwiseAbs().maxCoeff() <= lim0);
  CHECK(p.bias(1).isZero());
  CHECK(p == init_flow_params(small_model(), unit_stats(), 1));
  CHECK_FALSE(p == init_flow_params(small_model(), unit_stats(), 2));
  CHECK_NOTHROW(p.validate());
  auto bad = p;
  bad.layer_dims.back() = 5;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
}

TEST_CASE("net_forward: zero network and engineered identity") {
  auto p = init_flow_params(small_model(), unit_stats(), 3);
  const std::vector<double> w(10, 0.7), a{0.1, -0.2, 0.3, 0.4};
  auto z = p;
  z.theta.setZero();
  CHECK(net_forward(z, a, 0.3, w).isZero());

  // one linear layer that copies the action slice of the input
  FlowPolicyParams id = constant_velocity({0, 0, 0, 0}, 2);
  for (Eigen::Index i = 0; i < 4; ++i) id.weight(0)(i, 10 + i) = 1.0;
  const auto v = net_forward(id, a, 0.8, w);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(v(i) == a[static_cast<std::size_t>(i)]);
  CHECK_THROWS_AS(net_forward(p, a, 0.3, std::vector<double>(9)), PreconditionError);
}

TEST_CASE("net_forward: matches an independent matrix chain") {
  const auto p = init_flow_params(small_model(), unit_stats(), 5);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  std::vector<double> w(10), a(4);
  for (auto& x : w) x = nd(rng);
  for (auto& x : a) x = nd(rng);
  // plain loops over the flat theta layout: column-major W (out x in), then bias
  std::vector<double> h(w);
  h.insert(h.end(), a.begin(), a.end());
  h.push_back(0.42);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < p.layer_dims.size(); ++l) {
    const std::size_t in = p.layer_dims[l], out = p.layer_dims[l + 1];
    std::vector<double> z(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      for (std::size_t i = 0; i < in; ++i) z[o] += p.theta(static_cast<Eigen::Index>(off + i * out + o)) * h[i];
      z[o] += p.theta(static_cast<Eigen::Index>(off + in * out + o));
      if (l + 2 < p.layer_dims.size()) z[o] = std::tanh(z[o]);
    }
    off += in * out + out;
    h = z;
  }
  const auto v = net_forward(p, a, 0.42, w);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(v(static_cast<Eigen::Index>(i)) - h[i]) < 1e-10);
}

TEST_CASE("fm loss: degenerate sample, permutation invariance, empty batch") {
  auto p = init_flow_params(small_model(), unit_stats(), 2);
  auto b = random_batch(p, 8, 1);
  auto z = p;
  z.theta.setZero();
  auto same = b;
  same.noise = same.targets;
  CHECK(fm_loss(z, same) == 0.0);

  FmBatch perm = b;
  std::vector<Eigen::Index> idx(8);
  std::iota(idx.begin(), idx.end(), 0);
  std::reverse(idx.begin(), idx.end());
  for (Eigen::Index j = 0; j < 8; ++j) {
    perm.windows.col(j) = b.windows.col(idx[j]);
    perm.targets.col(j) = b.targets.col(idx[j]);
    perm.noise.col(j) = b.noise.col(idx[j]);
    perm.times(j) = b.times(idx[j]);
  }
  CHECK(fm_loss(p, perm) == doctest::Approx(fm_loss(p, b)).epsilon(1e-13));
  CHECK(fm_loss_and_grad(p, b).loss == doctest::Approx(fm_loss(p, b)).epsilon(1e-15));

  FmBatch empty = b;
  empty.windows.resize(10, 0);
  empty.targets.resize(4, 0);
  empty.noise.resize(4, 0);
  empty.times.resize(0);
  CHECK_THROWS_AS(fm_loss(p, empty), PreconditionError);
}

TEST_CASE("fm loss: analytic gradient matches central differences") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto p = init_flow_params(small_model(), unit_stats(), seed);
    // move biases off zero so every parameter matters
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 0.1);
    for (Eigen::Index i = 0; i < p.theta.size(); ++i) p.theta(i) += nd(rng);
    const auto b = random_batch(p, 16, seed + 100);
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
      const double rel = std::abs(fd - lg.grad(i)) / std::max(1e-8, std::abs(fd) + std::abs(lg.grad(i)));
      CHECK(rel < 1e-4);
    }
  }
}

TEST_CASE("inference: constant velocity telescopes for any N") {
  const std::vector<double> c{0.3, -0.4, 1.5, 0.25};
  const auto p = constant_velocity(c, 1);
  const std::vector<double> w(5, 0.0);
  for (std::size_t n : {1, 2, 7, 32}) {
    Rng a(11), b(11);
    const auto out = integrate_flow(p, w, n, a);
    for (Eigen::Index i = 0; i < 4; ++i) {
      const double a0 = standard_normal(b);
      CHECK(out(i) == doctest::Approx(a0 + c[static_cast<std::size_t>(i)]).epsilon(1e-13));
    }
    Rng r(1);
    const auto det = integrate_flow(p, w, n, r, true);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(det(i) == doctest::Approx(c[static_cast<std::size_t>(i)]).epsilon(1e-13));
  }
  Rng r(1);
  CHECK_THROWS_AS(integrate_flow(p, w, 0, r), PreconditionError);
}

TEST_CASE("inference: single Euler step is a0 + v(a0, 0)") {
  const auto p = init_flow_params(small_model(1, 2), unit_stats(), 4);
  const std::vector<double> w{0.1, 0.2, 0.3, 0.4, 0.5};
  Rng a(3), b(3);
  const auto out = integrate_flow(p, w, 1, a);
  std::vector<double> a0(4);
  for (auto& x : a0) x = standard_normal(b);
  const auto v = net_forward(p, a0, 0.0, w);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(out(i) == doctest::Approx(a0[static_cast<std::size_t>(i)] + v(i)).epsilon(1e-14));
}

TEST_CASE("receding step: denormalize, clamp and determinism") {
  NormStats s;
  s.action[0] = {0.5, 2.0, false};
  s.action[1] = {1.0, 0.5, false};
  const auto p = constant_velocity({-1.0, 2.0}, 1, s);
  const std::vector<double> w(5, 0.0);
  Rng r(1);
  const auto q = receding_step(p, w, 8, r, true);
  CHECK(q.delta_bid == 0.0);  // 0.5 + 2 * (-1) < 0
  CHECK(q.delta_ask == doctest::Approx(2.0).epsilon(1e-13));
  Rng a(5), b(5);
  CHECK(receding_step(p, w, 8, a) == receding_step(p, w, 8, b));
}

TEST_CASE("training: zero steps returns the initialization; seeds reproduce") {
  const auto recs = oracle::linear_task(300, 2, 2, 1);
  const auto stats = compute_norm_stats(recs);
  TrainConfig tc;
  tc.max_steps = 0;
  tc.seed = 9;
  const auto r0 = train_policy(recs, stats, small_model(), tc);
  CHECK(r0.params == init_flow_params(small_model(), stats, 9));
  CHECK(r0.loss_curve.empty());
  tc.max_steps = 30;
  tc.batch_size = 32;
  const auto a = train_policy(recs, stats, small_model(), tc), b = train_policy(recs, stats, small_model(), tc);
  CHECK(a.params == b.params);
  CHECK(a.loss_curve == b.loss_curve);
  tc.learning_rate = 0.0;
  CHECK_THROWS_AS(train_policy(recs, stats, small_model(), tc), ConfigError);
}

TEST_CASE("training: non-finite loss aborts with diagnostics") {
  auto recs = oracle::linear_task(50, 2, 2, 1);
  const auto stats = compute_norm_stats(recs);
  recs[3].actions[0] = std::numeric_limits<double>::infinity();
  TrainConfig tc;
  tc.max_steps = 50;
  tc.batch_size = 64;
  try {
    train_policy(recs, stats, small_model(), tc);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("step") != std::string::npos);
    CHECK(msg.find("lr") != std::string::npos);
    CHECK(msg.find("grad norm") != std::string::npos);
  }
}

TEST_CASE("training: synthetic linear map is learned") {
  const auto train = oracle::linear_task(5000, 2, 2, 1);
  const auto test = oracle::linear_task(200, 2, 2, 2);
  const auto stats = compute_norm_stats(train);
  ModelConfig m;
  m.hidden = {64, 64, 64};
  m.t_obs = 2;
  m.t_pred = 2;
  TrainConfig tc;
  tc.max_steps = 2500;
  tc.learning_rate = 3e-3;
  tc.cosine_decay = true;
  tc.seed = 5;
  const auto res = train_policy(train, stats, m, tc);
  const auto smooth = [&](std::size_t from) {
    return std::accumulate(res.loss_curve.begin() + from, res.loss_curve.begin() + from + 100, 0.0) / 100;
  };
  CHECK(smooth(res.loss_curve.size() - 100) < smooth(0));
  Rng rng(3);
  double se = 0;
  for (const auto& r : test) {
    const auto seq = infer_action_sequence(res.params, r.window, 32, rng);
    for (std::size_t i = 0; i < seq.size(); ++i)
      se += std::pow(seq[i].delta_bid - r.actions[2 * i], 2) + std::pow(seq[i].delta_ask - r.actions[2 * i + 1], 2);
  }
  CHECK(se / (test.size() * 4) < 1e-3);
}

TEST_CASE("checkpoint: round trip and error contract") {
  const auto recs = oracle::linear_task(100, 2, 2, 1);
  const auto p = init_flow_params(small_model(), compute_norm_stats(recs), 8);
  const auto path = std::filesystem::temp_directory_path() / "flowmm_test_model.ckpt";
  save_checkpoint(p, path);
  const auto q = load_checkpoint(path);
  CHECK(q == p);
  CHECK(encode_checkpoint(q) == encode_checkpoint(p));
  std::filesystem::remove(path);

  const auto bytes = encode_checkpoint(p);
  std::string bad = bytes;
  bad[1] = 'x';
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  bad = bytes;
  bad[8] = 7;
  CHECK_THROWS_AS(decode_checkpoint(bad), VersionMismatchError);
  bad = bytes;
  bad[bytes.size() / 2] ^= 1;
  CHECK_THROWS_AS(decode_checkpoint(bad), ChecksumError);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, 10)), TruncatedFileError);
}
