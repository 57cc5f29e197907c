#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flowmm/dataset.hpp"
#include "flowmm/env.hpp"
#include "flowmm/rng.hpp"

namespace flowmm {

/// Velocity network v(a, t | window) and everything inference needs.
///
/// The network is a fully-connected stack: tanh on every hidden layer, linear
/// output. Input is [normalized window | a_t | t], output has t_pred * 2
/// entries. Weights live in one flat vector `theta`, layer by layer, each layer
/// stored as a column-major (out x in) matrix followed by its bias.
struct FlowPolicyParams {
  std::vector<std::size_t> layer_dims;  ///< input, hidden..., output
  Eigen::VectorXd theta;
  std::uint32_t t_obs = 8;
  std::uint32_t t_pred = 4;
  std::uint32_t n_ode_steps = 16;
  std::string activation = "tanh";
  NormStats stats;

  std::size_t n_layers() const { return layer_dims.size() - 1; }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t window_dim() const { return std::size_t{t_obs} * kWindowFeatures; }
  std::size_t action_dim() const { return std::size_t{t_pred} * kActionDim; }

  /// Offset of layer l's weight block inside theta; its bias follows it.
  std::size_t weight_offset(std::size_t l) const;

  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t l) const;
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const;
  Eigen::Map<Eigen::MatrixXd> weight(std::size_t l);
  Eigen::Map<Eigen::VectorXd> bias(std::size_t l);

  /// Throws PreconditionError unless the shape invariants hold.
  void validate() const;

  bool operator==(const FlowPolicyParams& o) const;
};

struct ModelConfig {
  std::vector<std::size_t> hidden{128, 128, 128};
  std::uint32_t t_obs = 8;
  std::uint32_t t_pred = 4;
  std::uint32_t n_ode_steps = 16;
};

std::size_t parameter_count(std::span<const std::size_t> layer_dims);

/// Glorot-uniform weights, zero biases, seeded.
FlowPolicyParams init_flow_params(const ModelConfig& model, const NormStats& stats,
                                  std::uint64_t seed);

/// a_t = (1 - t) a0 + t aE and the target velocity u = aE - a0.
struct PathPoint {
  std::vector<double> a_t;
  std::vector<double> u;
};
PathPoint interpolate_path(std::span<const double> a0, std::span<const double> a_end, double t);

/// Batched forward pass. `inputs` is input_dim x batch; returns output_dim x batch.
Eigen::MatrixXd net_forward_batch(const FlowPolicyParams& params, const Eigen::MatrixXd& inputs);

/// Velocity for one normalized window and action state.
Eigen::VectorXd net_forward(const FlowPolicyParams& params, std::span<const double> a_t, double t,
                            std::span<const double> window_normalized);

/// One FM minibatch in normalized space; columns are samples.
struct FmBatch {
  Eigen::MatrixXd windows;  ///< window_dim x B
  Eigen::MatrixXd targets;  ///< a_E, action_dim x B
  Eigen::MatrixXd noise;    ///< a_0, action_dim x B
  Eigen::VectorXd times;    ///< t, B
};

struct LossAndGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;  ///< same layout as theta
};

/// Mean over the batch of || v(a_t, t | O) - (a_E - a_0) ||^2 and its
/// gradient by reverse-mode differentiation.
LossAndGrad fm_loss_and_grad(const FlowPolicyParams& params, const FmBatch& batch);

/// Loss only (used by finite-difference checks).
double fm_loss(const FlowPolicyParams& params, const FmBatch& batch);

struct TrainConfig {
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  std::size_t max_steps = 2000;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double grad_clip = 1.0;       ///< global L2 norm; <= 0 disables
  bool cosine_decay = false;    ///< anneal the learning rate to 0 over max_steps

  void validate() const;
};

struct TrainResult {
  FlowPolicyParams params;
  std::vector<double> loss_curve;  ///< one entry per optimizer step
};

/// Normalized training matrices built once from records.
struct TrainingSet {
  Eigen::MatrixXd windows;  ///< window_dim x N
  Eigen::MatrixXd actions;  ///< action_dim x N
};

TrainingSet make_training_set(std::span<const StateActionRecord> records, const NormStats& stats,
                              std::size_t t_obs, std::size_t t_pred);

/// Samples records uniformly with replacement, a_0 ~ N(0, I), t ~ U(0, 1).
FmBatch sample_fm_batch(const TrainingSet& data, std::size_t batch_size, Rng& rng);

/// FM training with Adam. Uses the records as given (caller picks the split).
TrainResult train_policy(std::span<const StateActionRecord> records, const NormStats& stats,
                         const ModelConfig& model, const TrainConfig& cfg);

/// Trains on the dataset's training split (episodes not reserved for validation).
TrainResult train_policy(const Dataset& dataset, const ModelConfig& model, const TrainConfig& cfg);

/// Euler integration of the learned ODE from a_0 to t = 1, in normalized space.
/// With `deterministic_prior` a_0 = 0 and the RNG is untouched. Raw (not
/// clamped, not denormalized) result.
Eigen::VectorXd integrate_flow(const FlowPolicyParams& params, std::span<const double> window_normalized,
                               std::size_t n_ode_steps, Rng& rng, bool deterministic_prior = false);

/// Full inference: normalize window, integrate, denormalize, clamp >= 0.
ActionSequence infer_action_sequence(const FlowPolicyParams& params, std::span<const double> window_raw,
                                     std::size_t n_ode_steps, Rng& rng,
                                     bool deterministic_prior = false);

/// First quote pair of infer_action_sequence.
QuoteAction receding_step(const FlowPolicyParams& params, std::span<const double> window_raw,
                          std::size_t n_ode_steps, Rng& rng, bool deterministic_prior = false);

class FlowPolicy final : public Policy {
 public:
  explicit FlowPolicy(std::shared_ptr<const FlowPolicyParams> params, std::size_t n_ode_steps = 0,
                      bool deterministic_prior = false, std::string name = "flow");
  ActionSequence plan(const ObservationWindow& window, Rng& rng) const override;
  std::size_t window_length() const override { return params_->t_obs; }
  std::string name() const override { return name_; }
  const FlowPolicyParams& params() const { return *params_; }

 private:
  std::shared_ptr<const FlowPolicyParams> params_;
  std::size_t n_ode_steps_;
  bool deterministic_prior_;
  std::string name_;
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

std::string encode_checkpoint(const FlowPolicyParams& params);
FlowPolicyParams decode_checkpoint(std::string_view bytes);
void save_checkpoint(const FlowPolicyParams& params, const std::filesystem::path& path);
FlowPolicyParams load_checkpoint(const std::filesystem::path& path);

}  // namespace flowmm
