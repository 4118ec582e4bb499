#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "iqlphase/gridworld.hpp"
#include "iqlphase/rng.hpp"

namespace iqlphase {

/// Fully connected ReLU network shape: input -> hidden... -> outputs.
struct NetShape {
  int input_dim = 4;
  std::vector<int> hidden{128, 128};
  int output_dim = kNumActions;

  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
  int layer_inputs(int layer) const { return layer == 0 ? input_dim : hidden[layer - 1]; }
  int layer_outputs(int layer) const {
    return layer == static_cast<int>(hidden.size()) ? output_dim : hidden[layer];
  }
  std::size_t parameter_count() const;

  friend bool operator==(const NetShape&, const NetShape&) = default;
};

/// Per-layer weight matrices (outputs x inputs, column-major) and bias
/// vectors packed into one contiguous buffer.
template <class Tag>
class LayeredTensors {
 public:
  using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
  using VectorMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

  LayeredTensors() = default;
  explicit LayeredTensors(NetShape shape) : shape_(std::move(shape)) {
    data_.assign(shape_.parameter_count(), 0.0);
    std::size_t offset = 0;
    for (int l = 0; l < shape_.layer_count(); ++l) {
      weight_offsets_.push_back(offset);
      offset += static_cast<std::size_t>(shape_.layer_outputs(l)) * shape_.layer_inputs(l);
      bias_offsets_.push_back(offset);
      offset += static_cast<std::size_t>(shape_.layer_outputs(l));
    }
  }

  const NetShape& shape() const { return shape_; }
  int layer_count() const { return shape_.layer_count(); }

  MatrixMap weights(int l) {
    return MatrixMap(data_.data() + weight_offsets_[l], shape_.layer_outputs(l), shape_.layer_inputs(l));
  }
  ConstMatrixMap weights(int l) const {
    return ConstMatrixMap(data_.data() + weight_offsets_[l], shape_.layer_outputs(l),
                          shape_.layer_inputs(l));
  }
  VectorMap bias(int l) { return VectorMap(data_.data() + bias_offsets_[l], shape_.layer_outputs(l)); }
  ConstVectorMap bias(int l) const {
    return ConstVectorMap(data_.data() + bias_offsets_[l], shape_.layer_outputs(l));
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }
  std::size_t size() const { return data_.size(); }

  friend bool operator==(const LayeredTensors&, const LayeredTensors&) = default;

 private:
  NetShape shape_;
  std::vector<double> data_;
  std::vector<std::size_t> weight_offsets_;
  std::vector<std::size_t> bias_offsets_;
};

using NetParams = LayeredTensors<struct ParamTag>;
using GradientSet = LayeredTensors<struct GradientTag>;
using QValues = std::array<double, kNumActions>;

/// Weights uniform in +-1/sqrt(fan_in), biases zero.
NetParams init_params(const NetShape& shape, Rng& rng);

QValues forward(const NetParams& params, std::span<const double> obs);

/// Batched forward pass; `obs` holds one observation per column. Returns
/// an (outputs x batch) matrix.
Eigen::MatrixXd forward_batch(const NetParams& params, const Eigen::MatrixXd& obs);

/// Huber loss with transition point 1 (smooth L1).
double huber(double residual);
/// d huber / d residual, i.e. the residual clamped to [-1, 1].
double huber_derivative(double residual);

struct BackwardResult {
  double mean_loss = 0.0;
  GradientSet grads;
  /// Per-sample TD error y - Q(s, a) at the current parameters.
  std::vector<double> residuals;
};

/// Gradient of the mean Huber loss over a batch, taken only through the
/// Q-values of the chosen actions. Targets are constants.
BackwardResult backward(const NetParams& params, const Eigen::MatrixXd& obs,
                        std::span<const int> actions, std::span<const double> targets);

double global_norm(std::span<const double> values);

/// Rescales `grads` in place so that its global L2 norm is at most
/// `max_norm`. Returns the norm before clipping.
double clip_gradients(GradientSet& grads, double max_norm = 1.0);

struct AdamConfig {
  double lr = 1.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam step over flat parameter and gradient buffers.
/// Throws NonFiniteGradient before touching any state.
void adam_update(std::span<double> params, AdamState& state, std::span<const double> grads,
                 const AdamConfig& cfg);
void adam_step(NetParams& params, AdamState& state, const GradientSet& grads, const AdamConfig& cfg);

/// target <- (1 - tau) * target + tau * online
void polyak_update(std::span<double> target, std::span<const double> online, double tau);
void polyak_update(NetParams& target, const NetParams& online, double tau);

bool all_finite(std::span<const double> values);

/// Binary checkpoint; layout documented in docs/file_formats.md.
void save_checkpoint(const NetParams& params, const std::filesystem::path& path);
NetParams load_checkpoint(const std::filesystem::path& path);

}  // namespace iqlphase
