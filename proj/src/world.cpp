#include "autocurriculum/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "autocurriculum/image.hpp"
#include "autocurriculum/random.hpp"

namespace autocurriculum {

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

std::string_view color_name(Color c) {
  switch (c) {
    case Color::Red: return "red";
    case Color::Green: return "green";
    case Color::Blue: return "blue";
  }
  return "?";
}

std::optional<Color> parse_color(std::string_view name) {
  for (Color c : kColors)
    if (color_name(c) == name) return c;
  return std::nullopt;
}

namespace {
constexpr std::array<std::string_view, kNumActions> kActionNames{
    "move+x", "move-x", "move+y", "move-y", "move+z", "move-z", "open", "close"};
}

std::string_view action_name(Action a) { return kActionNames[static_cast<int>(a)]; }

std::optional<Action> parse_action(std::string_view name) {
  for (int i = 0; i < kNumActions; ++i)
    if (kActionNames[i] == name) return static_cast<Action>(i);
  return std::nullopt;
}

std::optional<Color> WorldState::object_at(const Cell& cell) const {
  for (Color c : kColors)
    if (object(c) == cell) return c;
  return std::nullopt;
}

bool WorldState::supports(Color bottom, Color top) const {
  const Cell& b = object(bottom);
  const Cell& t = object(top);
  return bottom != top && b.x == t.x && b.y == t.y && t.z == b.z + 1;
}

std::optional<Color> WorldState::resting_on(Color c) const {
  for (Color o : kColors)
    if (supports(c, o)) return o;
  return std::nullopt;
}

std::optional<std::string> validate(const WorldState& s) {
  if (!s.tcp.in_bounds()) return "tcp out of bounds";
  if (s.aperture_steps < 0 || s.aperture_steps > kApertureSteps) return "aperture out of range";
  for (Color c : kColors) {
    const Cell& p = s.object(c);
    if (!p.in_bounds()) return std::string(color_name(c)) + " out of bounds";
    for (Color o : kColors)
      if (o != c && s.object(o) == p) return "two objects share a cell";
    if (s.held == c) continue;
    if (p.z == 0) continue;
    bool supported = false;
    for (Color o : kColors)
      if (o != c && s.held != o && s.supports(o, c)) supported = true;
    if (!supported) return std::string(color_name(c)) + " is floating";
  }
  if (s.grasp_sensor != s.held.has_value()) return "grasp sensor disagrees with held object";
  if (s.held && !(s.object(*s.held) == s.tcp)) return "held object is not at the tcp";
  return std::nullopt;
}

WorldState reset(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x5eedULL}));
  WorldState s;
  std::array<int, kGridXY * kGridXY> cells{};
  for (int i = 0; i < kGridXY * kGridXY; ++i) cells[i] = i;
  // Partial Fisher-Yates: first three entries become the object cells.
  for (int i = 0; i < 3; ++i) {
    std::size_t j = i + uniform_index(rng, cells.size() - i);
    std::swap(cells[i], cells[j]);
    s.objects[i] = Cell{cells[i] % kGridXY, cells[i] / kGridXY, 0};
  }
  int t = static_cast<int>(uniform_index(rng, kGridXY * kGridXY));
  s.tcp = Cell{t % kGridXY, t / kGridXY, kGridZ - 1};
  s.aperture_steps = kApertureSteps;
  return s;
}

namespace {

bool occupied_by_other(const WorldState& s, const Cell& cell, Color self) {
  for (Color c : kColors)
    if (c != self && s.object(c) == cell) return true;
  return false;
}

Cell resolve_drop(const WorldState& s, Color dropped) {
  const Cell& at = s.object(dropped);
  int landing = 0;
  for (Color c : kColors) {
    if (c == dropped) continue;
    const Cell& o = s.object(c);
    if (o.x == at.x && o.y == at.y && o.z < at.z + 1) landing = std::max(landing, o.z + 1);
  }
  Cell target{at.x, at.y, landing};
  if (target.in_bounds() && !occupied_by_other(s, target, dropped)) return target;
  // Nearest free floor cell; ring by ring, scanning +x, -x, +y, -y first.
  for (int r = 1; r < kGridXY; ++r) {
    std::vector<Cell> ring{{at.x + r, at.y, 0}, {at.x - r, at.y, 0}, {at.x, at.y + r, 0},
                           {at.x, at.y - r, 0}};
    for (int dx = -r; dx <= r; ++dx)
      for (int dy = -r; dy <= r; ++dy)
        if (std::max(std::abs(dx), std::abs(dy)) == r && dx != 0 && dy != 0)
          ring.push_back({at.x + dx, at.y + dy, 0});
    for (const Cell& c : ring)
      if (c.in_bounds() && !occupied_by_other(s, c, dropped)) return c;
  }
  throw std::logic_error("no free floor cell for dropped object");
}

}  // namespace

WorldState step(const WorldState& state, Action action) {
  WorldState s = state;
  auto move = [&](int dx, int dy, int dz) {
    Cell target{s.tcp.x + dx, s.tcp.y + dy, s.tcp.z + dz};
    if (!target.in_bounds()) return;
    if (s.held) {
      if (occupied_by_other(s, target, *s.held)) return;
      s.object(*s.held) = target;
    }
    s.tcp = target;
  };
  switch (action) {
    case Action::MoveXPos: move(1, 0, 0); break;
    case Action::MoveXNeg: move(-1, 0, 0); break;
    case Action::MoveYPos: move(0, 1, 0); break;
    case Action::MoveYNeg: move(0, -1, 0); break;
    case Action::MoveZPos: move(0, 0, 1); break;
    case Action::MoveZNeg: move(0, 0, -1); break;
    case Action::Close: {
      s.aperture_steps = std::max(0, s.aperture_steps - 1);
      if (!s.held && s.aperture_steps <= 1) {
        auto target = s.object_at(s.tcp);
        // Only the topmost object of a stack can be picked up.
        if (target && !s.resting_on(*target)) {
          s.held = target;
          s.grasp_sensor = true;
        }
      }
      break;
    }
    case Action::Open: {
      s.aperture_steps = std::min(kApertureSteps, s.aperture_steps + 1);
      if (s.held && s.aperture_steps > 1) {
        Color dropped = *s.held;
        s.held.reset();
        s.grasp_sensor = false;
        s.object(dropped) = resolve_drop(s, dropped);
      }
      break;
    }
  }
  return s;
}

SceneDescription describe(const WorldState& state) {
  SceneDescription d;
  d.objects = state.objects;
  d.tcp = state.tcp;
  d.aperture_steps = state.aperture_steps;
  d.held = state.held;
  for (Color top : kColors)
    for (Color bottom : kColors)
      if (state.supports(bottom, top) && state.held != top) d.relations.push_back({top, bottom});
  return d;
}

namespace {
std::string cell_text(const Cell& c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + "," + std::to_string(c.z) + ")";
}

Cell parse_cell(std::istream& in) {
  char open = 0, c1 = 0, c2 = 0, close = 0;
  Cell c;
  in >> open >> c.x >> c1 >> c.y >> c2 >> c.z >> close;
  if (!in || open != '(' || c1 != ',' || c2 != ',' || close != ')')
    throw std::invalid_argument("malformed cell in scene description");
  return c;
}
}  // namespace

std::string SceneDescription::to_text() const {
  std::ostringstream out;
  out << "objects:";
  for (Color c : kColors) {
    out << (c == Color::Red ? " " : "; ") << color_name(c) << " "
        << cell_text(objects[static_cast<int>(c)]);
  }
  out << "\nrelations:";
  if (relations.empty()) out << " none";
  for (std::size_t i = 0; i < relations.size(); ++i)
    out << (i ? "; " : " ") << color_name(relations[i].top) << " on "
        << color_name(relations[i].bottom);
  char aperture[16];
  std::snprintf(aperture, sizeof aperture, "%.1f", aperture_steps * 0.5);
  out << "\ngripper: " << cell_text(tcp) << " aperture " << aperture << " holding "
      << (held ? color_name(*held) : std::string_view("nothing"));
  return out.str();
}

SceneDescription SceneDescription::from_text(std::string_view text) {
  SceneDescription d;
  std::istringstream in{std::string(text)};
  std::string line;
  auto fail = [] { throw std::invalid_argument("malformed scene description"); };
  if (!std::getline(in, line) || line.rfind("objects:", 0) != 0) fail();
  {
    std::string body = line.substr(8);
    std::replace(body.begin(), body.end(), ';', ' ');
    std::istringstream ls(body);
    for (int i = 0; i < 3; ++i) {
      std::string name;
      ls >> name;
      auto c = parse_color(name);
      if (!c) fail();
      d.objects[static_cast<int>(*c)] = parse_cell(ls);
    }
  }
  if (!std::getline(in, line) || line.rfind("relations:", 0) != 0) fail();
  {
    std::string body = line.substr(10);
    std::replace(body.begin(), body.end(), ';', ' ');
    std::istringstream ls(body);
    std::string top, on, bottom;
    while (ls >> top) {
      if (top == "none") break;
      ls >> on >> bottom;
      auto t = parse_color(top), b = parse_color(bottom);
      if (!t || !b || on != "on") fail();
      d.relations.push_back({*t, *b});
    }
  }
  if (!std::getline(in, line) || line.rfind("gripper:", 0) != 0) fail();
  {
    std::istringstream ls(line.substr(8));
    d.tcp = parse_cell(ls);
    std::string word, holding, what;
    double aperture = 0;
    ls >> word >> aperture >> holding >> what;
    if (!ls || word != "aperture" || holding != "holding") fail();
    d.aperture_steps = static_cast<int>(std::lround(aperture * 2));
    if (what != "nothing") {
      d.held = parse_color(what);
      if (!d.held) fail();
    }
  }
  return d;
}

WorldState SceneDescription::to_state() const {
  WorldState s;
  s.objects = objects;
  s.tcp = tcp;
  s.aperture_steps = aperture_steps;
  s.held = held;
  s.grasp_sensor = held.has_value();
  return s;
}

namespace {
Rgb object_rgb(Color c) {
  switch (c) {
    case Color::Red: return {220, 40, 40};
    case Color::Green: return {40, 170, 60};
    case Color::Blue: return {40, 80, 220};
  }
  return {};
}
}  // namespace

std::vector<std::uint8_t> render_scene_png(const WorldState& state) {
  constexpr int kPx = 24;
  constexpr int kGap = 16;
  const int top_w = kGridXY * kPx;
  const int side_h = kGridZ * kPx;
  Canvas canvas(top_w * 2 + kGap * 3, top_w + kGap * 2, Rgb{235, 225, 205});
  const Rgb grid{200, 190, 170};
  // Left panel: top-down view. Right panel: side view (x against z).
  const int lx = kGap, ly = kGap, rx = kGap * 2 + top_w, ry = kGap + (top_w - side_h);
  for (int i = 0; i <= kGridXY; ++i) {
    canvas.line(lx + i * kPx, ly, lx + i * kPx, ly + top_w, grid);
    canvas.line(lx, ly + i * kPx, lx + top_w, ly + i * kPx, grid);
    canvas.line(rx + i * kPx, ry, rx + i * kPx, ry + side_h, grid);
  }
  for (int k = 0; k <= kGridZ; ++k) canvas.line(rx, ry + k * kPx, rx + top_w, ry + k * kPx, grid);

  // Draw lower objects first so the top of each stack is visible from above.
  std::array<Color, 3> order = kColors;
  std::sort(order.begin(), order.end(),
            [&](Color a, Color b) { return state.object(a).z < state.object(b).z; });
  for (Color c : order) {
    const Cell& p = state.object(c);
    int x0 = lx + p.x * kPx + 3, y0 = ly + (kGridXY - 1 - p.y) * kPx + 3;
    canvas.fill_rect(x0, y0, x0 + kPx - 7, y0 + kPx - 7, object_rgb(c));
    int sx = rx + p.x * kPx + 3, sy = ry + (kGridZ - 1 - p.z) * kPx + 3;
    canvas.fill_rect(sx, sy, sx + kPx - 7, sy + kPx - 7, object_rgb(c));
  }
  // Gripper glyph: two fingers whose spacing tracks the aperture.
  const Rgb black{20, 20, 20};
  const int spread = 2 + state.aperture_steps * 4;
  auto glyph = [&](int cx, int cy) {
    canvas.fill_rect(cx - spread - 2, cy - 8, cx - spread, cy + 8, black);
    canvas.fill_rect(cx + spread, cy - 8, cx + spread + 2, cy + 8, black);
    canvas.fill_rect(cx - spread, cy - 8, cx + spread, cy - 7, black);
  };
  glyph(lx + state.tcp.x * kPx + kPx / 2, ly + (kGridXY - 1 - state.tcp.y) * kPx + kPx / 2);
  glyph(rx + state.tcp.x * kPx + kPx / 2, ry + (kGridZ - 1 - state.tcp.z) * kPx + kPx / 2);
  return canvas.encode_png();
}

}  // namespace autocurriculum
