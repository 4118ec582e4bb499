#include "iqlphase/phase.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iqlphase/errors.hpp"

namespace iqlphase {

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::CoordinatedStable: return "coordinated_stable";
    case Regime::Fragile: return "fragile";
    case Regime::JammedDisordered: return "jammed_disordered";
  }
  return "fragile";
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw TooFewPoints("percentile of an empty set");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Thresholds thresholds(std::span<const double> csr_values, std::span<const double> s_values) {
  if (csr_values.size() < 2 || s_values.size() < 2) {
    throw TooFewPoints("thresholds need at least two conditions");
  }
  return Thresholds{percentile(csr_values, kReferencePercentile),
                    percentile(s_values, kReferencePercentile)};
}

double phase_distance(double csr, double s, Thresholds tau) {
  return std::hypot(csr - tau.csr, s - tau.s);
}

Regime classify(double csr, double s, Thresholds tau, double ridge_level) {
  if (phase_distance(csr, s, tau) <= ridge_level) return Regime::Fragile;
  if (csr >= tau.csr && s >= tau.s) return Regime::CoordinatedStable;
  return Regime::JammedDisordered;
}

namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<RidgeCrossing> ridge_cells(const PhaseField& field, double ridge_level) {
  const std::size_t rows = field.sides.size();
  const std::size_t cols = field.densities.size();
  std::vector<RidgeCrossing> out;

  auto add_edge = [&](GridIndex a, GridIndex b) {
    const auto& va = field.at(static_cast<std::size_t>(a.row), static_cast<std::size_t>(a.col));
    const auto& vb = field.at(static_cast<std::size_t>(b.row), static_cast<std::size_t>(b.col));
    if (!va || !vb) return;
    if ((*va - ridge_level) * (*vb - ridge_level) >= 0.0) return;
    out.push_back(RidgeCrossing{a, b, (ridge_level - *va) / (*vb - *va), 0});
  };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const GridIndex here{static_cast<int>(r), static_cast<int>(c)};
      if (c + 1 < cols) add_edge(here, GridIndex{here.row, here.col + 1});
      if (r + 1 < rows) add_edge(here, GridIndex{here.row + 1, here.col});
    }
  }

  // Crossings on the boundary of the same fully populated grid square connect.
  DisjointSets sets(out.size());
  auto touches_square = [](const RidgeCrossing& x, int r0, int c0) {
    auto inside = [&](GridIndex g) { return g.row >= r0 && g.row <= r0 + 1 && g.col >= c0 && g.col <= c0 + 1; };
    return inside(x.from) && inside(x.to);
  };
  for (std::size_t r = 0; r + 1 < rows; ++r) {
    for (std::size_t c = 0; c + 1 < cols; ++c) {
      if (!field.at(r, c) || !field.at(r + 1, c) || !field.at(r, c + 1) || !field.at(r + 1, c + 1)) continue;
      int first = -1;
      for (std::size_t k = 0; k < out.size(); ++k) {
        if (!touches_square(out[k], static_cast<int>(r), static_cast<int>(c))) continue;
        if (first < 0) {
          first = static_cast<int>(k);
        } else {
          sets.unite(first, static_cast<int>(k));
        }
      }
    }
  }
  std::vector<int> label(out.size(), -1);
  int next = 0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const int root = sets.find(static_cast<int>(k));
    if (label[root] < 0) label[root] = next++;
    out[k].chain = label[root];
  }
  return out;
}

int chain_count(std::span<const RidgeCrossing> crossings) {
  int n = 0;
  for (const auto& c : crossings) n = std::max(n, c.chain + 1);
  return n;
}

PhaseMap build_phase_map(std::span<const ConditionStats> stats, std::span<const int> sides,
                         std::span<const Density> densities, double ridge_level, StabilityAxis axis) {
  auto stability = [axis](const ConditionStats& c) { return axis == StabilityAxis::TdError ? c.s : c.s_grad; };
  std::vector<double> csr_values;
  std::vector<double> s_values;
  for (const auto& c : stats) {
    csr_values.push_back(c.csr);
    s_values.push_back(stability(c));
  }

  PhaseMap map;
  map.tau = thresholds(csr_values, s_values);
  for (PhaseField* f : {&map.csr, &map.s, &map.d_phase}) {
    f->sides.assign(sides.begin(), sides.end());
    f->densities.assign(densities.begin(), densities.end());
    f->values.assign(sides.size() * densities.size(), std::nullopt);
  }
  for (const auto& c : stats) {
    PhasePoint p;
    p.side = c.side;
    p.density = c.density;
    p.csr = c.csr;
    p.s = stability(c);
    p.d_phase = phase_distance(p.csr, p.s, map.tau);
    p.regime = classify(p.csr, p.s, map.tau, ridge_level);
    map.points.push_back(p);

    const auto row = std::find(sides.begin(), sides.end(), c.side);
    const auto col = std::find(densities.begin(), densities.end(), c.density);
    if (row == sides.end() || col == densities.end()) continue;
    const auto r = static_cast<std::size_t>(row - sides.begin());
    const auto k = static_cast<std::size_t>(col - densities.begin());
    map.csr.at(r, k) = p.csr;
    map.s.at(r, k) = p.s;
    map.d_phase.at(r, k) = p.d_phase;
  }
  map.ridge = ridge_cells(map.d_phase, ridge_level);
  return map;
}

}  // namespace iqlphase
