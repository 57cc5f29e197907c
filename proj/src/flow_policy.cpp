#include "flowmm/flow_policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "binary_io.hpp"
#include "flowmm/checksum.hpp"
#include "flowmm/errors.hpp"

namespace flowmm {

std::size_t parameter_count(std::span<const std::size_t> dims) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) n += dims[l + 1] * dims[l] + dims[l + 1];
  return n;
}

std::size_t FlowPolicyParams::weight_offset(std::size_t l) const {
  std::size_t off = 0;
  for (std::size_t i = 0; i < l; ++i) off += layer_dims[i + 1] * layer_dims[i] + layer_dims[i + 1];
  return off;
}

Eigen::Map<const Eigen::MatrixXd> FlowPolicyParams::weight(std::size_t l) const {
  return {theta.data() + weight_offset(l), static_cast<Eigen::Index>(layer_dims[l + 1]),
          static_cast<Eigen::Index>(layer_dims[l])};
}

Eigen::Map<const Eigen::VectorXd> FlowPolicyParams::bias(std::size_t l) const {
  return {theta.data() + weight_offset(l) + layer_dims[l + 1] * layer_dims[l],
          static_cast<Eigen::Index>(layer_dims[l + 1])};
}

Eigen::Map<Eigen::MatrixXd> FlowPolicyParams::weight(std::size_t l) {
  return {theta.data() + weight_offset(l), static_cast<Eigen::Index>(layer_dims[l + 1]),
          static_cast<Eigen::Index>(layer_dims[l])};
}

Eigen::Map<Eigen::VectorXd> FlowPolicyParams::bias(std::size_t l) {
  return {theta.data() + weight_offset(l) + layer_dims[l + 1] * layer_dims[l],
          static_cast<Eigen::Index>(layer_dims[l + 1])};
}

void FlowPolicyParams::validate() const {
  if (layer_dims.size() < 2) throw PreconditionError("FlowPolicyParams: need at least one layer");
  if (t_obs < 1 || t_pred < 1) throw PreconditionError("FlowPolicyParams: t_obs and t_pred must be >= 1");
  if (input_dim() != window_dim() + action_dim() + 1)
    throw PreconditionError("FlowPolicyParams: input size must be t_obs*5 + t_pred*2 + 1");
  if (output_dim() != action_dim())
    throw PreconditionError("FlowPolicyParams: output size must be t_pred*2");
  if (static_cast<std::size_t>(theta.size()) != parameter_count(layer_dims))
    throw PreconditionError("FlowPolicyParams: weight count does not match layer_dims");
  if (activation != "tanh") throw PreconditionError("FlowPolicyParams: unsupported activation " + activation);
  if (!theta.allFinite()) throw NonFiniteError("FlowPolicyParams: non-finite weights");
}

bool FlowPolicyParams::operator==(const FlowPolicyParams& o) const {
  return layer_dims == o.layer_dims && theta.size() == o.theta.size() && theta == o.theta &&
         t_obs == o.t_obs && t_pred == o.t_pred && n_ode_steps == o.n_ode_steps &&
         activation == o.activation && stats == o.stats;
}

FlowPolicyParams init_flow_params(const ModelConfig& model, const NormStats& stats,
                                  std::uint64_t seed) {
  FlowPolicyParams p;
  p.t_obs = model.t_obs;
  p.t_pred = model.t_pred;
  p.n_ode_steps = model.n_ode_steps;
  p.stats = stats;
  p.layer_dims.push_back(p.window_dim() + p.action_dim() + 1);
  for (auto h : model.hidden) {
    if (h == 0) throw ConfigError("ModelConfig: hidden width must be >= 1");
    p.layer_dims.push_back(h);
  }
  p.layer_dims.push_back(p.action_dim());
  p.theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count(p.layer_dims)));
  Rng rng = make_stream(seed, Stream::kInit);
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    const double fan = static_cast<double>(p.layer_dims[l] + p.layer_dims[l + 1]);
    std::uniform_real_distribution<double> u(-std::sqrt(6.0 / fan), std::sqrt(6.0 / fan));
    auto w = p.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
  }
  p.validate();
  return p;
}

PathPoint interpolate_path(std::span<const double> a0, std::span<const double> a_end, double t) {
  if (a0.size() != a_end.size()) throw PreconditionError("interpolate_path: shape mismatch");
  if (!(t >= 0.0 && t <= 1.0)) throw PreconditionError("interpolate_path: t must lie in [0, 1]");
  PathPoint p;
  p.a_t.resize(a0.size());
  p.u.resize(a0.size());
  for (std::size_t i = 0; i < a0.size(); ++i) {
    p.a_t[i] = (1.0 - t) * a0[i] + t * a_end[i];
    p.u[i] = a_end[i] - a0[i];
  }
  return p;
}

namespace {

struct ForwardCache {
  std::vector<Eigen::MatrixXd> acts;  ///< acts[0] = input, acts[l+1] = output of layer l
};

Eigen::MatrixXd forward(const FlowPolicyParams& p, const Eigen::MatrixXd& x, ForwardCache* cache) {
  Eigen::MatrixXd h = x;
  if (cache) cache->acts.assign(1, x);
  const std::size_t L = p.n_layers();
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = p.weight(l) * h;
    z.colwise() += p.bias(l);
    if (l + 1 < L) z = z.array().tanh();
    h = std::move(z);
    if (cache) cache->acts.push_back(h);
  }
  return h;
}

Eigen::MatrixXd assemble_inputs(const FmBatch& b, Eigen::MatrixXd* target_velocity) {
  const Eigen::Index B = b.windows.cols();
  const Eigen::Index nw = b.windows.rows(), na = b.targets.rows();
  Eigen::MatrixXd x(nw + na + 1, B);
  x.topRows(nw) = b.windows;
  for (Eigen::Index j = 0; j < B; ++j) {
    const double t = b.times(j);
    x.block(nw, j, na, 1) = (1.0 - t) * b.noise.col(j) + t * b.targets.col(j);
    x(nw + na, j) = t;
  }
  *target_velocity = b.targets - b.noise;
  return x;
}

void check_batch(const FlowPolicyParams& p, const FmBatch& b) {
  const auto B = b.windows.cols();
  if (B == 0) throw PreconditionError("fm_loss: empty batch");
  if (b.targets.cols() != B || b.noise.cols() != B || b.times.size() != B)
    throw PreconditionError("fm_loss: batch columns disagree");
  if (static_cast<std::size_t>(b.windows.rows()) != p.window_dim() ||
      static_cast<std::size_t>(b.targets.rows()) != p.action_dim() ||
      static_cast<std::size_t>(b.noise.rows()) != p.action_dim())
    throw PreconditionError("fm_loss: batch dimensions do not match the network");
}

}  // namespace

Eigen::MatrixXd net_forward_batch(const FlowPolicyParams& params, const Eigen::MatrixXd& inputs) {
  if (static_cast<std::size_t>(inputs.rows()) != params.input_dim())
    throw PreconditionError("net_forward: input dimension mismatch");
  return forward(params, inputs, nullptr);
}

Eigen::VectorXd net_forward(const FlowPolicyParams& params, std::span<const double> a_t, double t,
                            std::span<const double> window_normalized) {
  if (a_t.size() != params.action_dim() || window_normalized.size() != params.window_dim())
    throw PreconditionError("net_forward: dimension mismatch");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(params.input_dim()), 1);
  Eigen::Index i = 0;
  for (double v : window_normalized) x(i++, 0) = v;
  for (double v : a_t) x(i++, 0) = v;
  x(i, 0) = t;
  return forward(params, x, nullptr).col(0);
}

double fm_loss(const FlowPolicyParams& params, const FmBatch& batch) {
  check_batch(params, batch);
  Eigen::MatrixXd u;
  const Eigen::MatrixXd x = assemble_inputs(batch, &u);
  const Eigen::MatrixXd v = forward(params, x, nullptr);
  return (v - u).squaredNorm() / static_cast<double>(batch.windows.cols());
}

LossAndGrad fm_loss_and_grad(const FlowPolicyParams& params, const FmBatch& batch) {
  check_batch(params, batch);
  const double B = static_cast<double>(batch.windows.cols());
  Eigen::MatrixXd u;
  const Eigen::MatrixXd x = assemble_inputs(batch, &u);
  ForwardCache cache;
  const Eigen::MatrixXd v = forward(params, x, &cache);
  const Eigen::MatrixXd diff = v - u;

  LossAndGrad out;
  out.loss = diff.squaredNorm() / B;
  out.grad = Eigen::VectorXd::Zero(params.theta.size());

  Eigen::MatrixXd delta = (2.0 / B) * diff;  // dL/dz of the output layer
  for (std::size_t l = params.n_layers(); l-- > 0;) {
    const auto rows = static_cast<Eigen::Index>(params.layer_dims[l + 1]);
    const auto cols = static_cast<Eigen::Index>(params.layer_dims[l]);
    const std::size_t off = params.weight_offset(l);
    Eigen::Map<Eigen::MatrixXd> gw(out.grad.data() + off, rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(out.grad.data() + off + rows * cols, rows);
    const Eigen::MatrixXd& h_in = cache.acts[l];
    gw.noalias() = delta * h_in.transpose();
    gb = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd dh = params.weight(l).transpose() * delta;
      delta = dh.array() * (1.0 - h_in.array().square());
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("TrainConfig: learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("TrainConfig: moment coefficients must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("TrainConfig: epsilon must be > 0");
}

TrainingSet make_training_set(std::span<const StateActionRecord> records, const NormStats& stats,
                              std::size_t t_obs, std::size_t t_pred) {
  const std::size_t nw = t_obs * kWindowFeatures, na = t_pred * kActionDim;
  TrainingSet ts;
  ts.windows.resize(static_cast<Eigen::Index>(nw), static_cast<Eigen::Index>(records.size()));
  ts.actions.resize(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(records.size()));
  for (std::size_t j = 0; j < records.size(); ++j) {
    const auto& r = records[j];
    if (r.window.size() != nw || r.actions.size() != na)
      throw PreconditionError("training set: record shape does not match t_obs/t_pred");
    const auto w = normalize_window(r.window, stats);
    const auto a = normalize_actions(r.actions, stats);
    for (std::size_t i = 0; i < nw; ++i) ts.windows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w[i];
    for (std::size_t i = 0; i < na; ++i) ts.actions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i];
  }
  return ts;
}

FmBatch sample_fm_batch(const TrainingSet& data, std::size_t batch_size, Rng& rng) {
  const auto n = data.windows.cols();
  if (n == 0) throw PreconditionError("sample_fm_batch: empty training set");
  const auto B = static_cast<Eigen::Index>(batch_size);
  FmBatch b;
  b.windows.resize(data.windows.rows(), B);
  b.targets.resize(data.actions.rows(), B);
  b.noise.resize(data.actions.rows(), B);
  b.times.resize(B);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  for (Eigen::Index j = 0; j < B; ++j) {
    const auto k = pick(rng);
    b.windows.col(j) = data.windows.col(k);
    b.targets.col(j) = data.actions.col(k);
    for (Eigen::Index i = 0; i < b.noise.rows(); ++i) b.noise(i, j) = standard_normal(rng);
    b.times(j) = uniform01(rng);
  }
  return b;
}

TrainResult train_policy(std::span<const StateActionRecord> records, const NormStats& stats,
                         const ModelConfig& model, const TrainConfig& cfg) {
  cfg.validate();
  if (records.empty()) throw PreconditionError("train_policy: no training records");
  TrainResult res;
  res.params = init_flow_params(model, stats, cfg.seed);
  if (cfg.max_steps == 0) return res;

  const TrainingSet data = make_training_set(records, stats, model.t_obs, model.t_pred);
  Rng rng = make_stream(cfg.seed, Stream::kTrain);
  auto& theta = res.params.theta;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  double b1t = 1.0, b2t = 1.0;
  res.loss_curve.reserve(cfg.max_steps);

  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    const FmBatch batch = sample_fm_batch(data, cfg.batch_size, rng);
    LossAndGrad lg = fm_loss_and_grad(res.params, batch);
    const double gnorm = lg.grad.norm();
    double lr = cfg.learning_rate;
    if (cfg.cosine_decay)
      lr *= 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(step) / static_cast<double>(cfg.max_steps)));
    if (!std::isfinite(lg.loss) || !std::isfinite(gnorm)) {
      std::ostringstream os;
      os << "train_policy: non-finite loss at step " << step << " (lr " << lr << ", grad norm "
         << gnorm << ", loss " << lg.loss << ")";
      throw NonFiniteError(os.str());
    }
    res.loss_curve.push_back(lg.loss);
    if (cfg.grad_clip > 0.0 && gnorm > cfg.grad_clip) lg.grad *= cfg.grad_clip / gnorm;

    b1t *= cfg.beta1;
    b2t *= cfg.beta2;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * lg.grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * lg.grad.cwiseAbs2();
    const double c1 = 1.0 / (1.0 - b1t);
    const double c2 = 1.0 / (1.0 - b2t);
    theta.array() -= lr * (m.array() * c1) / ((v.array() * c2).sqrt() + cfg.epsilon);
  }
  res.params.validate();
  return res;
}

TrainResult train_policy(const Dataset& dataset, const ModelConfig& model, const TrainConfig& cfg) {
  if (dataset.t_obs != model.t_obs || dataset.t_pred != model.t_pred)
    throw ConfigError("train_policy: model t_obs/t_pred differ from the dataset's");
  std::vector<StateActionRecord> train;
  for (const auto& r : dataset.records)
    if (!is_validation_episode(r.episode_id)) train.push_back(r);
  return train_policy(train, dataset.stats, model, cfg);
}

Eigen::VectorXd integrate_flow(const FlowPolicyParams& params, std::span<const double> window_normalized,
                               std::size_t n_ode_steps, Rng& rng, bool deterministic_prior) {
  if (n_ode_steps < 1) throw PreconditionError("integrate_flow: n_ode_steps must be >= 1");
  if (window_normalized.size() != params.window_dim())
    throw PreconditionError("integrate_flow: window dimension mismatch");
  const auto nw = static_cast<Eigen::Index>(params.window_dim());
  const auto na = static_cast<Eigen::Index>(params.action_dim());
  Eigen::MatrixXd x(nw + na + 1, 1);
  for (Eigen::Index i = 0; i < nw; ++i) x(i, 0) = window_normalized[static_cast<std::size_t>(i)];
  Eigen::VectorXd a(na);
  for (Eigen::Index i = 0; i < na; ++i) a(i) = deterministic_prior ? 0.0 : standard_normal(rng);

  const double h = 1.0 / static_cast<double>(n_ode_steps);
  for (std::size_t k = 0; k < n_ode_steps; ++k) {
    x.block(nw, 0, na, 1) = a;
    x(nw + na, 0) = static_cast<double>(k) * h;
    a += h * forward(params, x, nullptr).col(0);
    if (!a.allFinite())
      throw NonFiniteError("integrate_flow: non-finite state at Euler step " + std::to_string(k));
  }
  return a;
}

ActionSequence infer_action_sequence(const FlowPolicyParams& params, std::span<const double> window_raw,
                                     std::size_t n_ode_steps, Rng& rng, bool deterministic_prior) {
  const auto wn = normalize_window(window_raw, params.stats);
  const Eigen::VectorXd a = integrate_flow(params, wn, n_ode_steps, rng, deterministic_prior);
  const auto raw = denormalize_actions(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                                       params.stats);
  ActionSequence seq(params.t_pred);
  for (std::size_t i = 0; i < seq.size(); ++i)
    seq[i] = {std::max(0.0, raw[2 * i]), std::max(0.0, raw[2 * i + 1])};
  return seq;
}

QuoteAction receding_step(const FlowPolicyParams& params, std::span<const double> window_raw,
                          std::size_t n_ode_steps, Rng& rng, bool deterministic_prior) {
  return infer_action_sequence(params, window_raw, n_ode_steps, rng, deterministic_prior).front();
}

FlowPolicy::FlowPolicy(std::shared_ptr<const FlowPolicyParams> params, std::size_t n_ode_steps,
                       bool deterministic_prior, std::string name)
    : params_(std::move(params)),
      n_ode_steps_(n_ode_steps),
      deterministic_prior_(deterministic_prior),
      name_(std::move(name)) {
  if (!params_) throw PreconditionError("FlowPolicy: null params");
  params_->validate();
  if (n_ode_steps_ == 0) n_ode_steps_ = params_->n_ode_steps;
}

ActionSequence FlowPolicy::plan(const ObservationWindow& window, Rng& rng) const {
  return infer_action_sequence(*params_, window.features(), n_ode_steps_, rng, deterministic_prior_);
}

// Checkpoint layout (little-endian):
//   "FMMCKPT\0" | u32 version | u32 n_dims | u64 dims[n_dims] | u32 t_obs
//   | u32 t_pred | u32 n_ode_steps | str activation | u64 norm-stats fingerprint
//   | norm stats (window then action: f64 mean, f64 std, u8 flag)
//   | u64 n_params | f64 theta[n_params] | u32 crc32 of everything above

namespace {
constexpr std::string_view kCheckpointMagic{"FMMCKPT\0", 8};
}

std::string encode_checkpoint(const FlowPolicyParams& p) {
  p.validate();
  detail::ByteWriter w;
  w.put_bytes(kCheckpointMagic);
  w.put(kCheckpointFormatVersion);
  w.put(static_cast<std::uint32_t>(p.layer_dims.size()));
  for (auto d : p.layer_dims) w.put(static_cast<std::uint64_t>(d));
  w.put(p.t_obs);
  w.put(p.t_pred);
  w.put(p.n_ode_steps);
  w.put_string(p.activation);
  w.put(p.stats.fingerprint());
  for (const auto& f : p.stats.window) {
    w.put(f.mean);
    w.put(f.std);
    w.put(static_cast<std::uint8_t>(f.degenerate));
  }
  for (const auto& f : p.stats.action) {
    w.put(f.mean);
    w.put(f.std);
    w.put(static_cast<std::uint8_t>(f.degenerate));
  }
  w.put(static_cast<std::uint64_t>(p.theta.size()));
  for (Eigen::Index i = 0; i < p.theta.size(); ++i) w.put(p.theta(i));
  w.put(crc32_of(w.buffer()));
  return std::move(w.buffer());
}

FlowPolicyParams decode_checkpoint(std::string_view bytes) {
  const std::size_t head_len = std::min(bytes.size(), kCheckpointMagic.size());
  if (bytes.substr(0, head_len) != kCheckpointMagic.substr(0, head_len))
    throw FormatError("not a checkpoint file (bad magic)");
  if (bytes.size() < kCheckpointMagic.size() + 4) throw TruncatedFileError("checkpoint: file truncated");
  detail::ByteReader head(bytes.substr(kCheckpointMagic.size()));
  const auto version = head.get<std::uint32_t>();
  if (version != kCheckpointFormatVersion)
    throw VersionMismatchError("checkpoint format version " + std::to_string(version) +
                               ", expected " + std::to_string(kCheckpointFormatVersion));
  if (bytes.size() < kCheckpointMagic.size() + 8) throw TruncatedFileError("checkpoint: file truncated");
  const auto body = bytes.substr(0, bytes.size() - 4);
  detail::ByteReader tail(bytes.substr(bytes.size() - 4));
  if (crc32_of(body) != tail.get<std::uint32_t>())
    throw ChecksumError("checkpoint: checksum mismatch (corrupted or truncated file)");

  detail::ByteReader r(body);
  r.get_bytes(kCheckpointMagic.size() + 4);
  FlowPolicyParams p;
  const auto nd = r.get<std::uint32_t>();
  if (nd > r.remaining() / 8) throw TruncatedFileError("checkpoint: layer count exceeds file size");
  p.layer_dims.resize(nd);
  for (auto& d : p.layer_dims) d = static_cast<std::size_t>(r.get<std::uint64_t>());
  p.t_obs = r.get<std::uint32_t>();
  p.t_pred = r.get<std::uint32_t>();
  p.n_ode_steps = r.get<std::uint32_t>();
  p.activation = r.get_string();
  const auto fp = r.get<std::uint64_t>();
  for (auto& f : p.stats.window) {
    f.mean = r.get<double>();
    f.std = r.get<double>();
    f.degenerate = r.get<std::uint8_t>() != 0;
  }
  for (auto& f : p.stats.action) {
    f.mean = r.get<double>();
    f.std = r.get<double>();
    f.degenerate = r.get<std::uint8_t>() != 0;
  }
  if (p.stats.fingerprint() != fp) throw FormatError("checkpoint: norm-stats fingerprint mismatch");
  const auto n = r.get<std::uint64_t>();
  if (n > r.remaining() / 8) throw TruncatedFileError("checkpoint: weight count exceeds file size");
  p.theta.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < p.theta.size(); ++i) p.theta(i) = r.get<double>();
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  p.validate();
  return p;
}

void save_checkpoint(const FlowPolicyParams& params, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

FlowPolicyParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace flowmm
