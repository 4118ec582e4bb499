#pragma once

// Reference implementations written without Eigen or the library's own
// helpers, so that tests compare two independent computations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "iqlphase/neuralnet.hpp"
#include "iqlphase/rng.hpp"

namespace oracle {

using iqlphase::NetParams;
using iqlphase::NetShape;

// Plain-loop forward pass. Weights are read element by element through the
// (out x in) layer maps.
inline std::vector<double> forward(const NetParams& p, const std::vector<double>& obs) {
  std::vector<double> x = obs;
  const int layers = p.shape().layer_count();
  for (int l = 0; l < layers; ++l) {
    const auto w = p.weights(l);
    const auto b = p.bias(l);
    std::vector<double> y(static_cast<std::size_t>(w.rows()));
    for (int r = 0; r < w.rows(); ++r) {
      double acc = b(r);
      for (int c = 0; c < w.cols(); ++c) acc += w(r, c) * x[static_cast<std::size_t>(c)];
      y[static_cast<std::size_t>(r)] = (l + 1 < layers) ? std::max(0.0, acc) : acc;
    }
    x = std::move(y);
  }
  return x;
}

// Smallest distance from any ReLU pre-activation to 0 or any Huber residual
// to +-1. Finite differences are only meaningful away from those kinks.
inline double kink_margin(const NetParams& p, const std::vector<double>& obs, int action, double target) {
  double margin = 1e300;
  std::vector<double> x = obs;
  const int layers = p.shape().layer_count();
  for (int l = 0; l < layers; ++l) {
    const auto w = p.weights(l);
    const auto b = p.bias(l);
    std::vector<double> y(static_cast<std::size_t>(w.rows()));
    for (int r = 0; r < w.rows(); ++r) {
      double acc = b(r);
      for (int c = 0; c < w.cols(); ++c) acc += w(r, c) * x[static_cast<std::size_t>(c)];
      if (l + 1 < layers) {
        margin = std::min(margin, std::abs(acc));
        acc = std::max(0.0, acc);
      }
      y[static_cast<std::size_t>(r)] = acc;
    }
    x = std::move(y);
  }
  return std::min(margin, std::abs(std::abs(target - x[static_cast<std::size_t>(action)]) - 1.0));
}

inline double huber(double r) {
  const double a = std::abs(r);
  return a <= 1.0 ? 0.5 * r * r : a - 0.5;
}

struct Sample {
  std::vector<double> obs;
  int action = 0;
  double target = 0.0;
};

inline double mean_loss(const NetParams& p, const std::vector<Sample>& batch) {
  double total = 0.0;
  for (const auto& s : batch) total += huber(s.target - forward(p, s.obs)[static_cast<std::size_t>(s.action)]);
  return total / static_cast<double>(batch.size());
}

inline double kink_margin(const NetParams& p, const std::vector<Sample>& batch) {
  double m = 1e300;
  for (const auto& s : batch) m = std::min(m, kink_margin(p, s.obs, s.action, s.target));
  return m;
}

// Central differences of mean_loss with respect to every flat parameter.
inline std::vector<double> numeric_gradient(NetParams p, const std::vector<Sample>& batch, double h = 1e-5) {
  std::vector<double> g(p.size());
  auto flat = p.flat();
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const double saved = flat[k];
    flat[k] = saved + h;
    const double up = mean_loss(p, batch);
    flat[k] = saved - h;
    const double down = mean_loss(p, batch);
    flat[k] = saved;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

// Textbook Adam on a single scalar.
struct ScalarAdam {
  double lr = 1.5e-4;
  double b1 = 0.9;
  double b2 = 0.999;
  double eps = 1e-8;
  double m = 0.0;
  double v = 0.0;
  int t = 0;

  double step(double theta, double g) {
    ++t;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mhat = m / (1.0 - std::pow(b1, t));
    const double vhat = v / (1.0 - std::pow(b2, t));
    return theta - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

inline double chi_square(const std::vector<long>& counts, double expected) {
  double stat = 0.0;
  for (long c : counts) stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  return stat;
}

// Upper 0.001 critical values of the chi-square distribution (standard tables).
inline double chi_square_critical_p001(int df) {
  switch (df) {
    case 4: return 18.467;
    case 9: return 27.877;
    default: return -1.0;
  }
}

inline double population_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size());
}

}  // namespace oracle
