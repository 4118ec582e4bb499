#include "iqlphase/gridworld.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "iqlphase/errors.hpp"

namespace iqlphase {

// ---------------------------------------------------------------------------
// Density

Density Density::from_denominator(int denominator) {
  if (denominator <= 0 || (denominator & (denominator - 1)) != 0) {
    throw UnsupportedCondition("density denominator must be a positive power of two, got " +
                               std::to_string(denominator));
  }
  return Density(denominator);
}

Density Density::from_value(double value) {
  if (!(value > 0.0) || value > 1.0) {
    throw UnsupportedCondition("density must lie in (0, 1]; supported: " + supported_conditions_text());
  }
  const double inv = 1.0 / value;
  const long rounded = std::lround(inv);
  if (rounded <= 0 || std::abs(inv - static_cast<double>(rounded)) > 1e-9 ||
      (rounded & (rounded - 1)) != 0) {
    throw UnsupportedCondition("unsupported density " + std::to_string(value) +
                               "; supported: " + supported_conditions_text());
  }
  return Density(static_cast<int>(rounded));
}

Density Density::parse(std::string_view text) {
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    int num = 0;
    int den = 0;
    const auto lhs = text.substr(0, slash);
    const auto rhs = text.substr(slash + 1);
    const auto r1 = std::from_chars(lhs.data(), lhs.data() + lhs.size(), num);
    const auto r2 = std::from_chars(rhs.data(), rhs.data() + rhs.size(), den);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || num != 1 ||
        r1.ptr != lhs.data() + lhs.size() || r2.ptr != rhs.data() + rhs.size()) {
      throw UnsupportedCondition("cannot parse density '" + std::string(text) +
                                 "'; supported: " + supported_conditions_text());
    }
    return from_denominator(den);
  }
  double value = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), value);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
    throw UnsupportedCondition("cannot parse density '" + std::string(text) +
                               "'; supported: " + supported_conditions_text());
  }
  return from_value(value);
}

std::string Density::to_string() const {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), value());
  return std::string(buf, r.ptr);
}

const std::vector<int>& supported_sides() {
  static const std::vector<int> sides{8, 16, 24, 32};
  return sides;
}

const std::vector<Density>& supported_densities() {
  static const std::vector<Density> densities{
      Density::from_denominator(32), Density::from_denominator(16), Density::from_denominator(8),
      Density::from_denominator(4), Density::from_denominator(2)};
  return densities;
}

std::string supported_conditions_text() {
  return "L in {8, 16, 24, 32}, rho in {0.03125, 0.0625, 0.125, 0.25, 0.5}, excluding (32, 0.5)";
}

int density_to_count(int side, Density density) {
  const auto& sides = supported_sides();
  const auto& dens = supported_densities();
  const bool side_ok = std::find(sides.begin(), sides.end(), side) != sides.end();
  const bool dens_ok = std::find(dens.begin(), dens.end(), density) != dens.end();
  if (!side_ok || !dens_ok || (side == 32 && density.denominator() == 2)) {
    throw UnsupportedCondition("unsupported condition (L=" + std::to_string(side) +
                               ", rho=" + density.to_string() + "); supported: " +
                               supported_conditions_text());
  }
  return side * side / density.denominator();
}

// ---------------------------------------------------------------------------
// GridConfig

GridConfig GridConfig::for_condition(int side, Density density, bool id_enabled, std::uint64_t seed) {
  return custom(side, density_to_count(side, density), id_enabled, seed);
}

GridConfig GridConfig::custom(int side, int agent_count, bool id_enabled, std::uint64_t seed) {
  GridConfig cfg;
  cfg.side = side;
  cfg.agent_count = agent_count;
  cfg.horizon = 8 * side;
  cfg.target_score = 0.8 * agent_count;
  cfg.id_enabled = id_enabled;
  cfg.goal_cell = Cell{side - 1, side - 1};
  cfg.rng_seed = seed;
  cfg.validate();
  return cfg;
}

void GridConfig::validate() const {
  if (side <= 0) throw InvalidConfig("side length must be positive");
  if (agent_count <= 0) throw InvalidConfig("agent count must be positive");
  if (horizon <= 0) throw InvalidConfig("horizon must be positive");
  if (static_cast<long>(agent_count) + 1 > static_cast<long>(side) * side) {
    throw InvalidConfig("agents plus goal do not fit: N=" + std::to_string(agent_count) +
                        " on a " + std::to_string(side) + "x" + std::to_string(side) + " grid");
  }
  if (fixed_goal && (goal_cell.row < 0 || goal_cell.row >= side || goal_cell.col < 0 ||
                     goal_cell.col >= side)) {
    throw InvalidConfig("fixed goal cell lies outside the grid");
  }
}

std::string_view to_string(DoneReason reason) {
  switch (reason) {
    case DoneReason::None: return "none";
    case DoneReason::TargetReached: return "target_reached";
    case DoneReason::Horizon: return "horizon";
  }
  return "none";
}

DoneReason done_reason_from_string(std::string_view text) {
  if (text == "target_reached") return DoneReason::TargetReached;
  if (text == "horizon") return DoneReason::Horizon;
  if (text == "none") return DoneReason::None;
  throw FormatError("unknown done reason '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// GridWorld

Cell apply_action(Cell from, Action action, int side) {
  Cell to = from;
  switch (action) {
    case Action::Stay: break;
    case Action::Up: to.row -= 1; break;
    case Action::Down: to.row += 1; break;
    case Action::Left: to.col -= 1; break;
    case Action::Right: to.col += 1; break;
  }
  if (to.row < 0 || to.row >= side || to.col < 0 || to.col >= side) return from;
  return to;
}

GridWorld::GridWorld(GridConfig config) : config_(config), rng_(config.rng_seed) {
  config_.validate();
}

const EnvState& GridWorld::reset() {
  const int side = config_.side;
  const int n = config_.agent_count;
  std::vector<int> cells(static_cast<std::size_t>(side) * side);
  std::iota(cells.begin(), cells.end(), 0);

  std::size_t drawn = 0;
  auto draw = [&]() {
    const std::size_t j = drawn + rng_.uniform_index(cells.size() - drawn);
    std::swap(cells[drawn], cells[j]);
    return cells[drawn++];
  };

  state_ = EnvState{};
  if (config_.fixed_goal) {
    const int goal_index = config_.goal_cell.row * side + config_.goal_cell.col;
    std::swap(cells[0], cells[static_cast<std::size_t>(goal_index)]);
    drawn = 1;
    state_.goal_position = config_.goal_cell;
  } else {
    const int g = draw();
    state_.goal_position = Cell{g / side, g % side};
  }
  state_.agent_positions.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int c = draw();
    state_.agent_positions.push_back(Cell{c / side, c % side});
  }
  state_.reached.assign(static_cast<std::size_t>(n), false);
  state_.arrival_step.assign(static_cast<std::size_t>(n), std::nullopt);
  has_state_ = true;
  return state_;
}

const EnvState& GridWorld::reset_to(std::span<const Cell> agents, Cell goal) {
  const int side = config_.side;
  if (static_cast<int>(agents.size()) != config_.agent_count) {
    throw DimensionMismatch("reset_to needs one cell per agent");
  }
  std::vector<bool> used(static_cast<std::size_t>(side) * side, false);
  auto claim = [&](Cell c) {
    if (c.row < 0 || c.row >= side || c.col < 0 || c.col >= side) throw InvalidConfig("cell off the grid");
    const auto k = static_cast<std::size_t>(c.row * side + c.col);
    if (used[k]) throw InvalidConfig("placements must be pairwise distinct");
    used[k] = true;
  };
  claim(goal);
  for (const Cell& c : agents) claim(c);

  state_ = EnvState{};
  state_.goal_position = goal;
  state_.agent_positions.assign(agents.begin(), agents.end());
  state_.reached.assign(agents.size(), false);
  state_.arrival_step.assign(agents.size(), std::nullopt);
  has_state_ = true;
  return state_;
}

int GridWorld::active_count() const {
  return static_cast<int>(std::count(state_.reached.begin(), state_.reached.end(), false));
}

// Simultaneous move resolution among non-reached agents:
//   (a) moves into a cell held by a stationary agent are cancelled,
//   (c) pairwise swaps are cancelled,
//   (b) contested cells go to one uniformly chosen mover;
// repeated until no move changes.
void GridWorld::resolve_moves(std::vector<Cell>& targets) {
  const int side = config_.side;
  const auto n = static_cast<int>(targets.size());
  const auto& pos = state_.agent_positions;
  auto index_of = [side](Cell c) { return c.row * side + c.col; };

  std::vector<int> occupant(static_cast<std::size_t>(side) * side, -1);
  for (int i = 0; i < n; ++i) {
    if (!state_.reached[i]) occupant[index_of(pos[i])] = i;
  }
  auto moving = [&](int i) { return !state_.reached[i] && !(targets[i] == pos[i]); };

  for (;;) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i = 0; i < n; ++i) {
        if (!moving(i)) continue;
        const int j = occupant[index_of(targets[i])];
        if (j < 0) continue;
        const bool blocked = !moving(j);
        const bool swap = moving(j) && targets[j] == pos[i];
        if (blocked || swap) {
          targets[i] = pos[i];
          if (swap) targets[j] = pos[j];
          changed = true;
        }
      }
    }

    std::map<int, std::vector<int>> contenders;
    for (int i = 0; i < n; ++i) {
      if (moving(i)) contenders[index_of(targets[i])].push_back(i);
    }
    bool contested = false;
    for (auto& [cell, group] : contenders) {
      if (group.size() < 2) continue;
      contested = true;
      const std::size_t winner = rng_.uniform_index(group.size());
      for (std::size_t k = 0; k < group.size(); ++k) {
        if (k != winner) targets[group[k]] = pos[group[k]];
      }
    }
    if (!contested) break;
  }
}

StepResult GridWorld::step(std::span<const Action> joint_action) {
  if (!has_state_) throw StepAfterDone("step called before reset");
  if (state_.done) throw StepAfterDone("step called on a terminal state");
  const int n = config_.agent_count;
  if (static_cast<int>(joint_action.size()) != n) {
    throw DimensionMismatch("joint action has " + std::to_string(joint_action.size()) +
                            " entries, expected " + std::to_string(n));
  }

  std::vector<Cell> targets(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    targets[i] = state_.reached[i]
                     ? state_.agent_positions[i]
                     : apply_action(state_.agent_positions[i], joint_action[i], config_.side);
  }
  resolve_moves(targets);

  StepResult result;
  result.rewards.assign(static_cast<std::size_t>(n), 0.0);
  const int new_step = state_.step_count + 1;
  double step_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (state_.reached[i]) continue;
    state_.agent_positions[i] = targets[i];
    double r = kStepPenalty;
    if (targets[i] == state_.goal_position) {
      r += kGoalReward;
      state_.reached[i] = true;
      state_.arrival_step[i] = new_step;
    }
    result.rewards[i] = r;
    step_sum += r;
  }
  state_.step_count = new_step;
  state_.accumulated_reward += step_sum;

  if (state_.accumulated_reward >= config_.target_score) {
    state_.done = true;
    state_.done_reason = DoneReason::TargetReached;
  } else if (state_.step_count >= config_.horizon) {
    state_.done = true;
    state_.done_reason = DoneReason::Horizon;
  }
  result.done = state_.done;
  result.done_reason = state_.done_reason;
  return result;
}

std::vector<double> GridWorld::observe(int agent_index) const {
  std::vector<double> out(static_cast<std::size_t>(config_.observation_dim()));
  observe_into(agent_index, out);
  return out;
}

void GridWorld::observe_into(int agent_index, std::span<double> out) const {
  if (!has_state_) throw Error("observe called before reset");
  if (agent_index < 0 || agent_index >= config_.agent_count) {
    throw IndexOutOfRange("agent index " + std::to_string(agent_index) + " out of range [0, " +
                          std::to_string(config_.agent_count) + ")");
  }
  if (static_cast<int>(out.size()) != config_.observation_dim()) {
    throw DimensionMismatch("observation buffer has wrong size");
  }
  const double inv = 1.0 / config_.side;
  const Cell own = state_.agent_positions[static_cast<std::size_t>(agent_index)];
  out[0] = own.row * inv;
  out[1] = own.col * inv;
  out[2] = state_.goal_position.row * inv;
  out[3] = state_.goal_position.col * inv;
  if (config_.id_enabled) {
    std::fill(out.begin() + 4, out.end(), 0.0);
    out[4 + static_cast<std::size_t>(agent_index)] = 1.0;
  }
}

}  // namespace iqlphase
