#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace autocurriculum {

enum class Color : std::uint8_t { Red = 0, Green = 1, Blue = 2 };

inline constexpr std::array<Color, 3> kColors{Color::Red, Color::Green, Color::Blue};

std::string_view color_name(Color c);
std::optional<Color> parse_color(std::string_view name);

inline constexpr int kGridXY = 8;  // x, y in {0, 0.05, ..., 0.35}
inline constexpr int kGridZ = 5;   // z in {0, 0.04, ..., 0.16}
inline constexpr double kCellXY = 0.05;
inline constexpr double kCellZ = 0.04;
inline constexpr int kApertureSteps = 2;  // aperture = steps * 0.5

struct Vec3 {
  double x = 0, y = 0, z = 0;
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  double norm() const;
};

struct Cell {
  int x = 0, y = 0, z = 0;
  bool operator==(const Cell&) const = default;
  Vec3 meters() const { return {x * kCellXY, y * kCellXY, z * kCellZ}; }
  bool in_bounds() const {
    return x >= 0 && x < kGridXY && y >= 0 && y < kGridXY && z >= 0 && z < kGridZ;
  }
};

enum class Action : std::uint8_t {
  MoveXPos = 0,
  MoveXNeg,
  MoveYPos,
  MoveYNeg,
  MoveZPos,
  MoveZNeg,
  Open,
  Close,
};

inline constexpr int kNumActions = 8;

std::string_view action_name(Action a);
std::optional<Action> parse_action(std::string_view name);

/// Full simulator state. Positions live on the lattice; metric accessors
/// convert to meters for the reward functions.
struct WorldState {
  std::array<Cell, 3> objects{};  // indexed by Color
  Cell tcp{};
  int aperture_steps = kApertureSteps;
  bool grasp_sensor = false;
  std::optional<Color> held;

  bool operator==(const WorldState&) const = default;

  const Cell& object(Color c) const { return objects[static_cast<int>(c)]; }
  Cell& object(Color c) { return objects[static_cast<int>(c)]; }
  Vec3 center(Color c) const { return object(c).meters(); }
  Vec3 tcp_position() const { return tcp.meters(); }
  double aperture() const { return aperture_steps * 0.5; }

  std::optional<Color> object_at(const Cell& cell) const;
  /// The object resting directly on top of `c`, if any.
  std::optional<Color> resting_on(Color c) const;
  /// True when `top` rests directly on `bottom` (same column, one level up).
  bool supports(Color bottom, Color top) const;
};

/// Checks every structural invariant; returns a description of the first
/// violation, or nullopt when the state is valid.
std::optional<std::string> validate(const WorldState& state);

WorldState reset(std::uint64_t seed);
WorldState step(const WorldState& state, Action action);

struct SupportRelation {
  Color top;
  Color bottom;
  bool operator==(const SupportRelation&) const = default;
};

/// Textual stand-in for the camera image fed to the prompts.
struct SceneDescription {
  std::array<Cell, 3> objects{};
  std::vector<SupportRelation> relations;  // sorted by (top, bottom)
  Cell tcp{};
  int aperture_steps = kApertureSteps;
  std::optional<Color> held;

  bool operator==(const SceneDescription&) const = default;

  std::string to_text() const;
  static SceneDescription from_text(std::string_view text);
  WorldState to_state() const;
};

SceneDescription describe(const WorldState& state);

/// Top-down plus side-view raster of the scene, PNG encoded.
std::vector<std::uint8_t> render_scene_png(const WorldState& state);

}  // namespace autocurriculum
