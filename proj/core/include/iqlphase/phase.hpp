#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "iqlphase/gridworld.hpp"
#include "iqlphase/metrics.hpp"

namespace iqlphase {

enum class Regime { CoordinatedStable, Fragile, JammedDisordered };
std::string_view to_string(Regime regime);

inline constexpr double kDefaultRidgeLevel = 0.4;
inline constexpr double kReferencePercentile = 0.6;

struct Thresholds {
  double csr = 0.0;
  double s = 0.0;
};

/// Percentile with linear interpolation between order statistics, rank p * (n - 1).
double percentile(std::span<const double> values, double p);

/// 60th percentiles of CSR and S, computed independently. Needs two or more points.
Thresholds thresholds(std::span<const double> csr_values, std::span<const double> s_values);

double phase_distance(double csr, double s, Thresholds tau);

/// Fragile inside the ridge band; outside it the quadrant relative to the
/// reference point separates coordinated from jammed.
Regime classify(double csr, double s, Thresholds tau, double ridge_level = kDefaultRidgeLevel);

struct PhasePoint {
  int side = 0;
  Density density = Density::from_denominator(32);
  double csr = 0.0;
  double s = 0.0;
  double d_phase = 0.0;
  Regime regime = Regime::Fragile;
};

/// Scalar field over the (L rows) x (rho columns) condition grid; empty
/// cells are excluded or missing conditions.
struct PhaseField {
  std::vector<int> sides;
  std::vector<Density> densities;
  std::vector<std::optional<double>> values;

  std::optional<double>& at(std::size_t row, std::size_t col) { return values[row * densities.size() + col]; }
  const std::optional<double>& at(std::size_t row, std::size_t col) const {
    return values[row * densities.size() + col];
  }
};

struct GridIndex {
  int row = 0;
  int col = 0;
  friend bool operator==(const GridIndex&, const GridIndex&) = default;
};

/// A ridge-level crossing on the edge from `from` to `to`, at `fraction`
/// of the way along it. Crossings sharing a grid square belong to one chain.
struct RidgeCrossing {
  GridIndex from;
  GridIndex to;
  double fraction = 0.0;
  int chain = 0;
};

std::vector<RidgeCrossing> ridge_cells(const PhaseField& field, double ridge_level = kDefaultRidgeLevel);
int chain_count(std::span<const RidgeCrossing> crossings);

enum class StabilityAxis { TdError, GradientNorm };

struct PhaseMap {
  Thresholds tau;
  std::vector<PhasePoint> points;
  PhaseField csr;
  PhaseField s;
  PhaseField d_phase;
  std::vector<RidgeCrossing> ridge;
};

/// Phase map over conditions whose stability indices are already normalized.
PhaseMap build_phase_map(std::span<const ConditionStats> stats, std::span<const int> sides,
                         std::span<const Density> densities, double ridge_level = kDefaultRidgeLevel,
                         StabilityAxis axis = StabilityAxis::TdError);

}  // namespace iqlphase
