#include "flowmm/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "flowmm/checksum.hpp"
#include "flowmm/errors.hpp"

namespace flowmm::cli {

Json default_config() {
  const MarketParams m;
  const EnvConfig e;
  const ExpertSettings x;
  const TrainConfig t;
  const ModelConfig mc;
  return Json{
      {"market",
       {{"mu", m.mu}, {"sigma", m.sigma}, {"hurst", m.hurst}, {"jump_intensity", m.jump_intensity},
        {"jump_mean", m.jump_mean}, {"jump_std", m.jump_std}, {"base_buy", m.base_buy},
        {"base_sell", m.base_sell}, {"alpha_bb", m.alpha_bb}, {"alpha_aa", m.alpha_aa},
        {"alpha_ba", m.alpha_ba}, {"alpha_ab", m.alpha_ab}, {"beta", m.beta},
        {"fill_decay", m.fill_decay}, {"base_fill", m.base_fill}, {"s0", m.s0}, {"dt", m.dt},
        {"n_steps", m.n_steps}}},
      {"env",
       {{"q_max", e.q_max}, {"inv_penalty", e.inv_penalty}, {"terminal_penalty", e.terminal_penalty},
        {"initial_cash", e.initial_cash}}},
      {"experts",
       {{"gamma", x.gamma}, {"pool", {"as", "glft", "glft-drift"}}, {"n_eval_episodes", x.n_eval_episodes},
        {"invert_inventory_skew", x.invert_inventory_skew}, {"random_lo", x.random_lo},
        {"random_hi", x.random_hi}}},
      {"grid",
       {{"volatility", {0.02, 0.1, 0.25}},
        {"arrival", {25.0, 37.5, 50.0}},
        {"hurst", {0.2, 0.5, 0.8}},
        {"drift", {0.0, 0.02}},
        {"jumps", Json::array({Json::array({0.0, 0.0, 0.0}), Json::array({1.0, 0.0, 0.05})})},
        {"excitation", Json::array({Json::array({0.0, 0.0}), Json::array({2.0, 0.0}),
                                    Json::array({2.0, 1.0})})}}},
      {"dataset", {{"n_episodes", 20}, {"t_obs", 8}, {"t_pred", 4}, {"text_export", false}}},
      {"model",
       {{"hidden", mc.hidden}, {"n_ode_steps", mc.n_ode_steps}, {"deterministic_prior", false}}},
      {"train",
       {{"batch_size", t.batch_size}, {"learning_rate", t.learning_rate}, {"max_steps", t.max_steps},
        {"beta1", t.beta1}, {"beta2", t.beta2}, {"epsilon", t.epsilon}, {"grad_clip", t.grad_clip},
        {"cosine_decay", t.cosine_decay}}},
      {"finetune",
       {{"scales", {0.8, 0.9, 1.0, 1.1, 1.2}},
        {"bid_offsets", AdjustGrid::default_offsets()},
        {"ask_offsets", AdjustGrid::default_offsets()},
        {"n_episodes", 20},
        {"per_regime", true}}},
      {"backtest",
       {{"n_episodes", 200},
        {"hurst", 0.5},
        {"drift", 0.0},
        {"regimes", Json::array({Json{{"name", "HH"}, {"sigma", 0.25}, {"arrival", 50.0}},
                                 Json{{"name", "HL"}, {"sigma", 0.25}, {"arrival", 25.0}},
                                 Json{{"name", "LH"}, {"sigma", 0.02}, {"arrival", 50.0}},
                                 Json{{"name", "LL"}, {"sigma", 0.02}, {"arrival", 25.0}}})},
        {"include_experts", true}}},
      {"scaling",
       {{"subsets", Json::array({Json::array({"as"}), Json::array({"as", "glft"}),
                                 Json::array({"as", "glft", "glft-drift"})})},
        {"eval_episodes", 50}}},
      {"ablation", {{"n_episodes", 20}, {"eval_episodes", 50}}},
      {"simulate", {{"expert", "glft"}, {"n_episodes", 1}}},
      {"paths", {{"dataset", ""}, {"checkpoint", ""}, {"adjust", ""}}},
      {"runtime", {{"workers", 1}}},
  };
}

namespace {

const char* kind_name(const Json& j) {
  if (j.is_boolean()) return "boolean";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  if (j.is_object()) return "object";
  return "null";
}

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) {
    // integers may not silently become fractions
    if (a.is_number_integer() || a.is_number_unsigned()) return b.is_number_integer() || b.is_number_unsigned();
    return true;
  }
  return std::string_view(kind_name(a)) == kind_name(b);
}

Json parse_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return Json(text);
  }
}

}  // namespace

void merge_checked(Json& base, const Json& user, const std::string& prefix) {
  if (!user.is_object()) throw ConfigError("config: expected an object at '" + (prefix.empty() ? "<root>" : prefix) + "'");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("config: unknown key '" + key + "'");
    Json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), key);
    } else {
      if (!same_kind(slot, it.value()))
        throw ConfigError("config: type mismatch for '" + key + "' (expected " + kind_name(slot) +
                          ", got " + kind_name(it.value()) + ")");
      slot = it.value();
    }
  }
}

Json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Json user;
  try {
    user = Json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  Json cfg = default_config();
  merge_checked(cfg, user);
  return cfg;
}

void apply_overrides(Json& cfg, const std::vector<std::string>& overrides) {
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("config: override '" + ov + "' is not key=value");
    const std::string key = ov.substr(0, eq);
    Json patch = parse_value(ov.substr(eq + 1));
    // build {"a": {"b": value}} from "a.b"
    std::size_t end = key.size();
    while (true) {
      const auto dot = key.rfind('.', end - 1);
      const std::string part = key.substr(dot == std::string::npos ? 0 : dot + 1,
                                          end - (dot == std::string::npos ? 0 : dot + 1));
      if (part.empty()) throw ConfigError("config: malformed key '" + key + "'");
      patch = Json{{part, std::move(patch)}};
      if (dot == std::string::npos) break;
      end = dot;
    }
    merge_checked(cfg, patch);
  }
}

std::uint64_t config_hash(const Json& cfg) { return fnv1a64(cfg.dump()); }

namespace {

template <typename T>
T get(const Json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + section + "." + key + ": " + e.what());
  }
}

std::vector<ExpertKind> parse_pool(const Json& arr, const std::string& key) {
  std::vector<ExpertKind> out;
  if (!arr.is_array()) throw ConfigError("config: " + key + " must be an array of expert names");
  for (const auto& v : arr) {
    if (!v.is_string()) throw ConfigError("config: " + key + " entries must be strings");
    out.push_back(parse_expert(v.get<std::string>()));
  }
  return out;
}

}  // namespace

MarketParams market_from(const Json& c) {
  MarketParams m;
  m.mu = get<double>(c, "market", "mu");
  m.sigma = get<double>(c, "market", "sigma");
  m.hurst = get<double>(c, "market", "hurst");
  m.jump_intensity = get<double>(c, "market", "jump_intensity");
  m.jump_mean = get<double>(c, "market", "jump_mean");
  m.jump_std = get<double>(c, "market", "jump_std");
  m.base_buy = get<double>(c, "market", "base_buy");
  m.base_sell = get<double>(c, "market", "base_sell");
  m.alpha_bb = get<double>(c, "market", "alpha_bb");
  m.alpha_aa = get<double>(c, "market", "alpha_aa");
  m.alpha_ba = get<double>(c, "market", "alpha_ba");
  m.alpha_ab = get<double>(c, "market", "alpha_ab");
  m.beta = get<double>(c, "market", "beta");
  m.fill_decay = get<double>(c, "market", "fill_decay");
  m.base_fill = get<double>(c, "market", "base_fill");
  m.s0 = get<double>(c, "market", "s0");
  m.dt = get<double>(c, "market", "dt");
  const auto n = get<std::int64_t>(c, "market", "n_steps");
  if (n < 1) throw ConfigError("config: market.n_steps must be >= 1");
  m.n_steps = static_cast<std::size_t>(n);
  m.validate();
  return m;
}

EnvConfig env_from(const Json& c) {
  EnvConfig e;
  e.q_max = get<int>(c, "env", "q_max");
  e.inv_penalty = get<double>(c, "env", "inv_penalty");
  e.terminal_penalty = get<double>(c, "env", "terminal_penalty");
  e.initial_cash = get<double>(c, "env", "initial_cash");
  e.validate();
  return e;
}

ExpertSettings experts_from(const Json& c) {
  ExpertSettings x;
  x.gamma = get<double>(c, "experts", "gamma");
  x.pool = parse_pool(c.at("experts").at("pool"), "experts.pool");
  if (x.pool.empty()) throw ConfigError("config: experts.pool is empty");
  const auto n = get<std::int64_t>(c, "experts", "n_eval_episodes");
  if (n < 1) throw ConfigError("config: experts.n_eval_episodes must be >= 1");
  x.n_eval_episodes = static_cast<std::size_t>(n);
  x.invert_inventory_skew = get<bool>(c, "experts", "invert_inventory_skew");
  x.random_lo = get<double>(c, "experts", "random_lo");
  x.random_hi = get<double>(c, "experts", "random_hi");
  ExpertConfig probe;
  probe.gamma = x.gamma;
  probe.random_lo = x.random_lo;
  probe.random_hi = x.random_hi;
  probe.validate();
  return x;
}

GridConfig grid_from(const Json& c) {
  GridConfig g;
  g.base = market_from(c);
  g.volatility = get<std::vector<double>>(c, "grid", "volatility");
  g.arrival = get<std::vector<double>>(c, "grid", "arrival");
  g.hurst = get<std::vector<double>>(c, "grid", "hurst");
  g.drift = get<std::vector<double>>(c, "grid", "drift");
  g.jumps.clear();
  for (const auto& j : get<std::vector<std::vector<double>>>(c, "grid", "jumps")) {
    if (j.size() != 3) throw ConfigError("config: grid.jumps entries are [intensity, mean, std]");
    g.jumps.push_back({j[0], j[1], j[2]});
  }
  g.excitation.clear();
  for (const auto& x : get<std::vector<std::vector<double>>>(c, "grid", "excitation")) {
    if (x.size() != 2) throw ConfigError("config: grid.excitation entries are [alpha_self, alpha_cross]");
    g.excitation.push_back({x[0], x[1]});
  }
  build_scenario_grid(g);  // validates every scenario
  return g;
}

DataConfig data_from(const Json& c) {
  DataConfig d;
  d.grid = grid_from(c);
  d.env = env_from(c);
  d.experts = experts_from(c);
  const auto n = get<std::int64_t>(c, "dataset", "n_episodes");
  const auto to = get<std::int64_t>(c, "dataset", "t_obs");
  const auto tp = get<std::int64_t>(c, "dataset", "t_pred");
  if (n < 1) throw ConfigError("config: dataset.n_episodes must be >= 1");
  if (to < 1 || tp < 1) throw ConfigError("config: dataset.t_obs and dataset.t_pred must be >= 1");
  if (static_cast<std::size_t>(tp) > d.grid.base.n_steps)
    throw ConfigError("config: dataset.t_pred exceeds market.n_steps");
  d.n_episodes = static_cast<std::size_t>(n);
  d.t_obs = static_cast<std::uint32_t>(to);
  d.t_pred = static_cast<std::uint32_t>(tp);
  return d;
}

ModelConfig model_from(const Json& c) {
  ModelConfig m;
  m.hidden = get<std::vector<std::size_t>>(c, "model", "hidden");
  for (auto h : m.hidden)
    if (h == 0) throw ConfigError("config: model.hidden widths must be >= 1");
  const auto n = get<std::int64_t>(c, "model", "n_ode_steps");
  if (n < 1) throw ConfigError("config: model.n_ode_steps must be >= 1");
  m.n_ode_steps = static_cast<std::uint32_t>(n);
  m.t_obs = static_cast<std::uint32_t>(get<std::int64_t>(c, "dataset", "t_obs"));
  m.t_pred = static_cast<std::uint32_t>(get<std::int64_t>(c, "dataset", "t_pred"));
  return m;
}

TrainConfig train_from(const Json& c, std::uint64_t seed) {
  TrainConfig t;
  const auto bs = get<std::int64_t>(c, "train", "batch_size");
  const auto steps = get<std::int64_t>(c, "train", "max_steps");
  if (bs < 1) throw ConfigError("config: train.batch_size must be >= 1");
  if (steps < 0) throw ConfigError("config: train.max_steps must be >= 0");
  t.batch_size = static_cast<std::size_t>(bs);
  t.max_steps = static_cast<std::size_t>(steps);
  t.learning_rate = get<double>(c, "train", "learning_rate");
  t.beta1 = get<double>(c, "train", "beta1");
  t.beta2 = get<double>(c, "train", "beta2");
  t.epsilon = get<double>(c, "train", "epsilon");
  t.grad_clip = get<double>(c, "train", "grad_clip");
  t.cosine_decay = get<bool>(c, "train", "cosine_decay");
  t.seed = mix_seed(seed, static_cast<std::uint64_t>(Stream::kTrain));
  t.validate();
  return t;
}

AdjustGrid adjust_grid_from(const Json& c) {
  AdjustGrid g;
  g.scales = get<std::vector<double>>(c, "finetune", "scales");
  g.bid_offsets = get<std::vector<double>>(c, "finetune", "bid_offsets");
  g.ask_offsets = get<std::vector<double>>(c, "finetune", "ask_offsets");
  g.validate();
  return g;
}

RegimeConfig regimes_from(const Json& c) {
  RegimeConfig r;
  r.base = market_from(c);
  r.hurst = get<double>(c, "backtest", "hurst");
  r.drift = get<double>(c, "backtest", "drift");
  r.regimes.clear();
  const Json& arr = c.at("backtest").at("regimes");
  if (!arr.is_array() || arr.empty()) throw ConfigError("config: backtest.regimes must be a non-empty array");
  for (const auto& g : arr) {
    if (!g.is_object()) throw ConfigError("config: backtest.regimes entries must be objects");
    for (auto it = g.begin(); it != g.end(); ++it)
      if (it.key() != "name" && it.key() != "sigma" && it.key() != "arrival")
        throw ConfigError("config: unknown key 'backtest.regimes." + it.key() + "'");
    try {
      r.regimes.push_back({g.at("name").get<std::string>(), g.at("sigma").get<double>(),
                           g.at("arrival").get<double>()});
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("config: backtest.regimes: ") + e.what());
    }
  }
  regime_scenarios(r);  // validates
  return r;
}

std::vector<std::vector<ExpertKind>> scaling_subsets_from(const Json& c) {
  std::vector<std::vector<ExpertKind>> out;
  const Json& arr = c.at("scaling").at("subsets");
  if (!arr.is_array() || arr.empty()) throw ConfigError("config: scaling.subsets must be a non-empty array");
  for (const auto& s : arr) {
    out.push_back(parse_pool(s, "scaling.subsets"));
    if (out.back().empty()) throw ConfigError("config: scaling.subsets entries must be non-empty");
  }
  return out;
}

GridConfig regime_grid_from(const Json& c) {
  const RegimeConfig r = regimes_from(c);
  GridConfig g;
  g.base = r.base;
  g.volatility.clear();
  g.arrival.clear();
  for (const auto& reg : r.regimes) {
    if (std::find(g.volatility.begin(), g.volatility.end(), reg.sigma) == g.volatility.end())
      g.volatility.push_back(reg.sigma);
    if (std::find(g.arrival.begin(), g.arrival.end(), reg.arrival) == g.arrival.end())
      g.arrival.push_back(reg.arrival);
  }
  g.hurst = {r.hurst};
  g.drift = {r.drift};
  g.jumps = {{0.0, 0.0, 0.0}};
  g.excitation = {{0.0, 0.0}};
  return g;
}

}  // namespace flowmm::cli
