#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iqlphase/rng.hpp"

namespace iqlphase {

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

enum class Action : std::uint8_t { Stay = 0, Up = 1, Down = 2, Left = 3, Right = 4 };
inline constexpr int kNumActions = 5;

/// Agent density restricted to 1/2^k. Stored as the denominator so that
/// N = L^2 / denominator is computed exactly.
class Density {
 public:
  static Density from_denominator(int denominator);
  /// Accepts "0.125", "1/8" or a plain double literal.
  static Density parse(std::string_view text);
  static Density from_value(double value);

  int denominator() const { return denominator_; }
  double value() const { return 1.0 / denominator_; }
  /// Shortest decimal form, e.g. "0.03125".
  std::string to_string() const;

  friend bool operator==(const Density&, const Density&) = default;
  /// Orders by value (ascending density).
  friend bool operator<(const Density& a, const Density& b) { return a.denominator_ > b.denominator_; }

 private:
  explicit Density(int denominator) : denominator_(denominator) {}
  int denominator_ = 1;
};

const std::vector<int>& supported_sides();
const std::vector<Density>& supported_densities();
std::string supported_conditions_text();

/// Exact agent count rho * L^2 for one of the 19 supported conditions.
int density_to_count(int side, Density density);

struct GridConfig {
  int side = 8;
  int agent_count = 2;
  int horizon = 64;
  double target_score = 1.6;
  bool id_enabled = true;
  /// When set, the goal stays at `goal_cell` instead of being re-sampled at every reset.
  bool fixed_goal = false;
  Cell goal_cell{};
  std::uint64_t rng_seed = 0;

  /// Config for a supported (L, rho) condition: horizon 8L, target 0.8N.
  static GridConfig for_condition(int side, Density density, bool id_enabled, std::uint64_t seed);
  /// Arbitrary (L, N) config with the same derived horizon and target. Validated.
  static GridConfig custom(int side, int agent_count, bool id_enabled, std::uint64_t seed);

  void validate() const;
  int observation_dim() const { return 4 + (id_enabled ? agent_count : 0); }
};

enum class DoneReason : std::uint8_t { None = 0, TargetReached = 1, Horizon = 2 };
std::string_view to_string(DoneReason reason);
DoneReason done_reason_from_string(std::string_view text);

struct EnvState {
  std::vector<Cell> agent_positions;
  Cell goal_position{};
  std::vector<bool> reached;
  std::vector<std::optional<int>> arrival_step;
  int step_count = 0;
  double accumulated_reward = 0.0;
  bool done = false;
  DoneReason done_reason = DoneReason::None;
};

struct StepResult {
  std::vector<double> rewards;
  bool done = false;
  DoneReason done_reason = DoneReason::None;
};

inline constexpr double kStepPenalty = -0.005;
inline constexpr double kGoalReward = 1.0;

/// L x L navigation task with N agents and one goal. Owns its random source;
/// identical seeds and action sequences give identical trajectories.
class GridWorld {
 public:
  explicit GridWorld(GridConfig config);

  const EnvState& reset();
  /// Starts an episode from explicit, pairwise distinct placements.
  const EnvState& reset_to(std::span<const Cell> agents, Cell goal);
  StepResult step(std::span<const Action> joint_action);

  /// [row/L, col/L, goal_row/L, goal_col/L] followed by the one-hot agent id when enabled.
  std::vector<double> observe(int agent_index) const;
  void observe_into(int agent_index, std::span<double> out) const;

  const EnvState& state() const { return state_; }
  const GridConfig& config() const { return config_; }
  int active_count() const;

 private:
  void resolve_moves(std::vector<Cell>& targets);

  GridConfig config_;
  EnvState state_;
  Rng rng_;
  bool has_state_ = false;
};

/// Cell reached by applying `action` at `from`; off-grid moves stay put.
Cell apply_action(Cell from, Action action, int side);

}  // namespace iqlphase
