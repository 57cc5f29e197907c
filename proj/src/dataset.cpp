#include "flowmm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "binary_io.hpp"
#include "flowmm/checksum.hpp"
#include "flowmm/errors.hpp"

namespace flowmm {

ScenarioGrid build_scenario_grid(const GridConfig& cfg) {
  const std::array<std::size_t, 6> lens{cfg.volatility.size(), cfg.arrival.size(),
                                        cfg.hurst.size(),      cfg.drift.size(),
                                        cfg.jumps.size(),      cfg.excitation.size()};
  static constexpr const char* kNames[6] = {"volatility", "arrival", "hurst",
                                            "drift",      "jumps",   "excitation"};
  std::size_t total = 1;
  for (std::size_t i = 0; i < 6; ++i) {
    if (lens[i] == 0) throw ConfigError(std::string("scenario grid: axis '") + kNames[i] + "' is empty");
    total *= lens[i];
  }

  ScenarioGrid grid;
  grid.axis_lengths = lens;
  grid.scenarios.reserve(total);
  for (std::size_t id = 0; id < total; ++id) {
    Scenario s;
    s.id = id;
    std::size_t rest = id;
    for (std::size_t ax = 6; ax-- > 0;) {
      s.axis_index[ax] = rest % lens[ax];
      rest /= lens[ax];
    }
    MarketParams p = cfg.base;
    p.sigma = cfg.volatility[s.axis_index[0]];
    p.base_buy = p.base_sell = p.base_fill = cfg.arrival[s.axis_index[1]];
    p.hurst = cfg.hurst[s.axis_index[2]];
    p.mu = cfg.drift[s.axis_index[3]];
    const auto& j = cfg.jumps[s.axis_index[4]];
    p.jump_intensity = j.intensity;
    p.jump_mean = j.mean;
    p.jump_std = j.std;
    const auto& x = cfg.excitation[s.axis_index[5]];
    p.alpha_bb = p.alpha_aa = x.alpha_self;
    p.alpha_ba = p.alpha_ab = x.alpha_cross;
    p.validate();
    s.params = p;
    grid.scenarios.push_back(s);
  }
  return grid;
}

bool is_validation_episode(std::uint64_t episode_id) { return episode_id % 10 == 9; }

std::vector<StateActionRecord> collect_pairs(const Scenario& scenario, const EnvConfig& env,
                                             ExpertKind expert, const ExpertConfig& expert_cfg,
                                             std::size_t n_episodes, std::size_t t_obs,
                                             std::size_t t_pred, std::uint64_t seed) {
  const std::size_t n = scenario.params.n_steps;
  if (t_obs < 1 || t_pred < 1) throw ConfigError("collect_pairs: t_obs and t_pred must be >= 1");
  if (t_pred > n) throw ConfigError("collect_pairs: t_pred exceeds n_steps");

  const ExpertPolicy policy(expert, expert_cfg);
  std::vector<StateActionRecord> out;
  out.reserve(n_episodes * (n - t_pred + 1));
  for (std::size_t e = 0; e < n_episodes; ++e) {
    const auto ep = run_episode(scenario.params, env, policy, episode_seed(seed, scenario.id, e),
                                {.record_trajectory = true});
    ObservationWindow window(t_obs, n);
    for (std::size_t t = 0; t + t_pred <= n; ++t) {
      window.push(ep.observations[t]);
      StateActionRecord r;
      r.scenario_id = scenario.id;
      r.episode_id = e;
      r.step = t;
      r.expert_id = static_cast<std::uint32_t>(expert);
      r.window = window.features();
      r.actions.reserve(t_pred * kActionDim);
      for (std::size_t h = 0; h < t_pred; ++h) {
        r.actions.push_back(ep.actions[t + h].delta_bid);
        r.actions.push_back(ep.actions[t + h].delta_ask);
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

template <std::size_t N>
std::array<FeatureStats, N> pooled_stats(std::span<const StateActionRecord> records,
                                         std::vector<double> StateActionRecord::*field) {
  std::array<double, N> sum{};
  std::array<std::size_t, N> count{};
  for (const auto& r : records) {
    const auto& v = r.*field;
    for (std::size_t i = 0; i < v.size(); ++i) {
      sum[i % N] += v[i];
      ++count[i % N];
    }
  }
  std::array<FeatureStats, N> out;
  std::array<double, N> ss{};
  for (std::size_t f = 0; f < N; ++f) out[f].mean = sum[f] / static_cast<double>(count[f]);
  for (const auto& r : records) {
    const auto& v = r.*field;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = v[i] - out[i % N].mean;
      ss[i % N] += d * d;
    }
  }
  for (std::size_t f = 0; f < N; ++f) {
    const double sd = std::sqrt(ss[f] / static_cast<double>(count[f] - 1));
    if (sd > 0.0 && std::isfinite(sd)) {
      out[f].std = sd;
    } else {
      out[f].std = 1.0;
      out[f].degenerate = true;
    }
  }
  return out;
}

template <std::size_t N>
std::vector<double> apply(std::span<const double> x, const std::array<FeatureStats, N>& s,
                          bool forward) {
  if (x.size() % N != 0) throw PreconditionError("normalize: length is not a multiple of the feature count");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& f = s[i % N];
    out[i] = forward ? (x[i] - f.mean) / f.std : x[i] * f.std + f.mean;
  }
  return out;
}

}  // namespace

NormStats compute_norm_stats(std::span<const StateActionRecord> records) {
  if (records.size() < 2) throw PreconditionError("compute_norm_stats: need at least two records");
  NormStats s;
  s.window = pooled_stats<kWindowFeatures>(records, &StateActionRecord::window);
  s.action = pooled_stats<kActionDim>(records, &StateActionRecord::actions);
  return s;
}

std::uint64_t NormStats::fingerprint() const {
  detail::ByteWriter w;
  for (const auto& f : window) {
    w.put(f.mean);
    w.put(f.std);
    w.put(static_cast<std::uint8_t>(f.degenerate));
  }
  for (const auto& f : action) {
    w.put(f.mean);
    w.put(f.std);
    w.put(static_cast<std::uint8_t>(f.degenerate));
  }
  return fnv1a64(w.buffer());
}

std::vector<double> normalize_window(std::span<const double> w, const NormStats& s) {
  return apply(w, s.window, true);
}
std::vector<double> denormalize_window(std::span<const double> w, const NormStats& s) {
  return apply(w, s.window, false);
}
std::vector<double> normalize_actions(std::span<const double> a, const NormStats& s) {
  return apply(a, s.action, true);
}
std::vector<double> denormalize_actions(std::span<const double> a, const NormStats& s) {
  return apply(a, s.action, false);
}

// ---------------------------------------------------------------------------
// Binary layout (little-endian):
//   "FMMDSET\0" | u32 version | u32 t_obs | u32 t_pred | u32 n_window_features
//   | u32 n_action_features | u64 master_seed | u64 config_hash | u64 n_records
//   | str manifest | stats (window then action: f64 mean, f64 std, u8 flag)
//   | records: u32 payload_bytes, u64 scenario, u64 episode, u64 step,
//     u32 expert, f64[t_obs*5] window, f64[t_pred*2] actions
//   | u32 crc32 of everything above

namespace {

constexpr std::string_view kDatasetMagic{"FMMDSET\0", 8};

void put_stats(detail::ByteWriter& w, const FeatureStats& f) {
  w.put(f.mean);
  w.put(f.std);
  w.put(static_cast<std::uint8_t>(f.degenerate));
}

FeatureStats get_stats(detail::ByteReader& r) {
  FeatureStats f;
  f.mean = r.get<double>();
  f.std = r.get<double>();
  f.degenerate = r.get<std::uint8_t>() != 0;
  return f;
}

}  // namespace

std::string encode_dataset(const Dataset& ds) {
  if (ds.records.empty()) throw PreconditionError("write_dataset: no records");
  const std::size_t nw = static_cast<std::size_t>(ds.t_obs) * kWindowFeatures;
  const std::size_t na = static_cast<std::size_t>(ds.t_pred) * kActionDim;
  detail::ByteWriter w;
  w.put_bytes(kDatasetMagic);
  w.put(kDatasetFormatVersion);
  w.put(ds.t_obs);
  w.put(ds.t_pred);
  w.put(static_cast<std::uint32_t>(kWindowFeatures));
  w.put(static_cast<std::uint32_t>(kActionDim));
  w.put(ds.master_seed);
  w.put(ds.config_hash);
  w.put(static_cast<std::uint64_t>(ds.records.size()));
  w.put_string(NormStats::kManifest);
  for (const auto& f : ds.stats.window) put_stats(w, f);
  for (const auto& f : ds.stats.action) put_stats(w, f);
  const auto payload = static_cast<std::uint32_t>(3 * 8 + 4 + 8 * (nw + na));
  for (const auto& r : ds.records) {
    if (r.window.size() != nw || r.actions.size() != na)
      throw PreconditionError("write_dataset: record shape does not match t_obs/t_pred");
    w.put(payload);
    w.put(r.scenario_id);
    w.put(r.episode_id);
    w.put(r.step);
    w.put(r.expert_id);
    for (double v : r.window) w.put(v);
    for (double v : r.actions) w.put(v);
  }
  w.put(crc32_of(w.buffer()));
  return std::move(w.buffer());
}

Dataset decode_dataset(std::string_view bytes) {
  const std::size_t head_len = std::min(bytes.size(), kDatasetMagic.size());
  if (bytes.substr(0, head_len) != kDatasetMagic.substr(0, head_len))
    throw FormatError("not a dataset file (bad magic)");
  if (bytes.size() < kDatasetMagic.size() + 4) throw TruncatedFileError("dataset: file truncated");
  detail::ByteReader head(bytes.substr(kDatasetMagic.size()));
  const auto version = head.get<std::uint32_t>();
  if (version != kDatasetFormatVersion)
    throw VersionMismatchError("dataset format version " + std::to_string(version) +
                               ", expected " + std::to_string(kDatasetFormatVersion));
  if (bytes.size() < kDatasetMagic.size() + 8) throw TruncatedFileError("dataset: file truncated");
  const auto body = bytes.substr(0, bytes.size() - 4);
  detail::ByteReader tail(bytes.substr(bytes.size() - 4));
  if (crc32_of(body) != tail.get<std::uint32_t>())
    throw ChecksumError("dataset: checksum mismatch (corrupted or truncated file)");

  detail::ByteReader r(body);
  r.get_bytes(kDatasetMagic.size());
  r.get<std::uint32_t>();
  Dataset ds;
  ds.t_obs = r.get<std::uint32_t>();
  ds.t_pred = r.get<std::uint32_t>();
  if (r.get<std::uint32_t>() != kWindowFeatures || r.get<std::uint32_t>() != kActionDim)
    throw FormatError("dataset: feature counts do not match this build");
  ds.master_seed = r.get<std::uint64_t>();
  ds.config_hash = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  if (r.get_string() != NormStats::kManifest) throw FormatError("dataset: unexpected feature manifest");
  for (auto& f : ds.stats.window) f = get_stats(r);
  for (auto& f : ds.stats.action) f = get_stats(r);
  const std::size_t nw = static_cast<std::size_t>(ds.t_obs) * kWindowFeatures;
  const std::size_t na = static_cast<std::size_t>(ds.t_pred) * kActionDim;
  const auto payload = static_cast<std::uint32_t>(3 * 8 + 4 + 8 * (nw + na));
  if (n > r.remaining() / (payload + 4)) throw TruncatedFileError("dataset: record count exceeds file size");
  ds.records.resize(n);
  for (auto& rec : ds.records) {
    if (r.get<std::uint32_t>() != payload) throw FormatError("dataset: record length mismatch");
    rec.scenario_id = r.get<std::uint64_t>();
    rec.episode_id = r.get<std::uint64_t>();
    rec.step = r.get<std::uint64_t>();
    rec.expert_id = r.get<std::uint32_t>();
    rec.window.resize(nw);
    for (auto& v : rec.window) v = r.get<double>();
    rec.actions.resize(na);
    for (auto& v : rec.actions) v = r.get<double>();
  }
  if (r.remaining() != 0) throw FormatError("dataset: trailing bytes after records");
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  const std::string bytes = encode_dataset(ds);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_dataset(bytes);
}

void export_dataset_text(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "# flowmm dataset text export v" << kDatasetFormatVersion << "\n";
  out << "# t_obs=" << ds.t_obs << " t_pred=" << ds.t_pred << " master_seed=" << ds.master_seed
      << " config_hash=" << hex64(ds.config_hash) << " records=" << ds.records.size() << "\n";
  out << "# features=" << NormStats::kManifest << "\n";
  out << "# stats:";
  for (const auto& f : ds.stats.window) out << ' ' << num(f.mean) << '/' << num(f.std) << '/' << f.degenerate;
  out << " |";
  for (const auto& f : ds.stats.action) out << ' ' << num(f.mean) << '/' << num(f.std) << '/' << f.degenerate;
  out << "\n# columns: scenario episode step expert window[t_obs*5] actions[t_pred*2]\n";
  for (const auto& r : ds.records) {
    out << r.scenario_id << ' ' << r.episode_id << ' ' << r.step << ' ' << r.expert_id;
    for (double v : r.window) out << ' ' << num(v);
    for (double v : r.actions) out << ' ' << num(v);
    out << '\n';
  }
}

}  // namespace flowmm
