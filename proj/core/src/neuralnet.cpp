#include "iqlphase/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iqlphase/errors.hpp"

namespace iqlphase {

std::size_t NetShape::parameter_count() const {
  std::size_t total = 0;
  for (int l = 0; l < layer_count(); ++l) {
    total += static_cast<std::size_t>(layer_outputs(l)) * (layer_inputs(l) + 1);
  }
  return total;
}

NetParams init_params(const NetShape& shape, Rng& rng) {
  NetParams params(shape);
  for (int l = 0; l < params.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(shape.layer_inputs(l)));
    auto w = params.weights(l);
    // Column-major fill keeps the draw order tied to the flat layout.
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
    }
    params.bias(l).setZero();
  }
  return params;
}

namespace {

void check_input(const NetParams& params, Eigen::Index rows) {
  if (rows != params.shape().input_dim) {
    throw DimensionMismatch("observation has dimension " + std::to_string(rows) +
                            ", network expects " + std::to_string(params.shape().input_dim));
  }
}

}  // namespace

Eigen::MatrixXd forward_batch(const NetParams& params, const Eigen::MatrixXd& obs) {
  check_input(params, obs.rows());
  Eigen::MatrixXd act = obs;
  const int last = params.layer_count() - 1;
  for (int l = 0; l <= last; ++l) {
    Eigen::MatrixXd z(params.weights(l).rows(), act.cols());
    z.noalias() = params.weights(l) * act;
    z.colwise() += params.bias(l);
    if (l < last) z = z.cwiseMax(0.0);
    act = std::move(z);
  }
  return act;
}

QValues forward(const NetParams& params, std::span<const double> obs) {
  const Eigen::Map<const Eigen::VectorXd> x(obs.data(), static_cast<Eigen::Index>(obs.size()));
  check_input(params, x.rows());
  if (params.shape().output_dim != kNumActions) {
    throw DimensionMismatch("network output dimension differs from the action count");
  }
  Eigen::VectorXd act = x;
  const int last = params.layer_count() - 1;
  for (int l = 0; l <= last; ++l) {
    Eigen::VectorXd z = params.weights(l) * act + params.bias(l);
    if (l < last) z = z.cwiseMax(0.0);
    act = std::move(z);
  }
  QValues q{};
  for (int a = 0; a < kNumActions; ++a) q[a] = act(a);
  return q;
}

double huber(double residual) {
  const double a = std::abs(residual);
  return a <= 1.0 ? 0.5 * residual * residual : a - 0.5;
}

double huber_derivative(double residual) { return std::clamp(residual, -1.0, 1.0); }

BackwardResult backward(const NetParams& params, const Eigen::MatrixXd& obs,
                        std::span<const int> actions, std::span<const double> targets) {
  check_input(params, obs.rows());
  const Eigen::Index batch = obs.cols();
  if (batch == 0) throw DimensionMismatch("empty batch");
  if (static_cast<Eigen::Index>(actions.size()) != batch ||
      static_cast<Eigen::Index>(targets.size()) != batch) {
    throw DimensionMismatch("batch, action and target lengths differ");
  }
  const int layers = params.layer_count();
  const int outputs = params.shape().output_dim;

  // activations[l] is the input to layer l; pre[l] its pre-activation output.
  std::vector<Eigen::MatrixXd> activations(static_cast<std::size_t>(layers));
  std::vector<Eigen::MatrixXd> pre(static_cast<std::size_t>(layers));
  activations[0] = obs;
  for (int l = 0; l < layers; ++l) {
    pre[l].resize(params.weights(l).rows(), batch);
    pre[l].noalias() = params.weights(l) * activations[l];
    pre[l].colwise() += params.bias(l);
    if (l + 1 < layers) activations[l + 1] = pre[l].cwiseMax(0.0);
  }
  const Eigen::MatrixXd& q = pre[layers - 1];

  BackwardResult out;
  out.residuals.resize(static_cast<std::size_t>(batch));
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(outputs, batch);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const int a = actions[j];
    if (a < 0 || a >= outputs) throw DimensionMismatch("action index out of range");
    const double r = targets[j] - q(a, j);
    out.residuals[j] = r;
    loss += huber(r);
    delta(a, j) = -huber_derivative(r) * inv_batch;
  }
  out.mean_loss = loss * inv_batch;

  out.grads = GradientSet(params.shape());
  for (int l = layers - 1; l >= 0; --l) {
    out.grads.weights(l).noalias() = delta * activations[l].transpose();
    out.grads.bias(l) = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd upstream(params.weights(l).cols(), batch);
      upstream.noalias() = params.weights(l).transpose() * delta;
      delta = upstream.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

double global_norm(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

double clip_gradients(GradientSet& grads, double max_norm) {
  const double norm = global_norm(grads.flat());
  // The slack absorbs rounding in the rescaled norm, so clipping twice is a no-op.
  if (norm > max_norm * (1.0 + 1e-12)) {
    const double scale = max_norm / norm;
    for (double& g : grads.flat()) g *= scale;
  }
  return norm;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void adam_update(std::span<double> params, AdamState& state, std::span<const double> grads,
                 const AdamConfig& cfg) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw DimensionMismatch("Adam parameter, gradient and state sizes differ");
  }
  if (!all_finite(grads)) throw NonFiniteGradient("gradient contains NaN or Inf");

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bias1;
    const double v_hat = state.v[i] / bias2;
    params[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

void adam_step(NetParams& params, AdamState& state, const GradientSet& grads, const AdamConfig& cfg) {
  if (!(params.shape() == grads.shape())) throw DimensionMismatch("gradient shape differs from parameters");
  adam_update(params.flat(), state, grads.flat(), cfg);
}

void polyak_update(std::span<double> target, std::span<const double> online, double tau) {
  if (target.size() != online.size()) throw DimensionMismatch("Polyak operands differ in size");
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidConfig("Polyak tau must lie in (0, 1]");
  if (tau == 1.0) {
    std::copy(online.begin(), online.end(), target.begin());
    return;
  }
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i] = (1.0 - tau) * target[i] + tau * online[i];
  }
}

void polyak_update(NetParams& target, const NetParams& online, double tau) {
  if (!(target.shape() == online.shape())) throw DimensionMismatch("Polyak operands differ in shape");
  polyak_update(target.flat(), online.flat(), tau);
}

}  // namespace iqlphase
