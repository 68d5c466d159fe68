#include "histoport/kitting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "histoport/group.hpp"

namespace histoport {

Vec2 Vec2::rotated(double theta) const {
  double c = std::cos(theta), s = std::sin(theta);
  return {c * x - s * y, s * x + c * y};
}

double Vec2::norm() const { return std::hypot(x, y); }

namespace {

double wrap_pos(double a, double period) {
  double r = std::fmod(a, period);
  if (r < 0) r += period;
  return r;
}

// (-pi, pi] wrap.
double wrap_signed(double a) {
  double r = wrap_pos(a, kTwoPi);
  if (r > kPi) r -= kTwoPi;
  return r;
}

}  // namespace

bool ShapeSpec::contains(Vec2 p) const {
  double gx = p.x / cell_size + center.x;
  double gy = p.y / cell_size + center.y;
  int cx = int(std::floor(gx)), cy = int(std::floor(gy));
  for (const auto& [ux, uy] : cells)
    if (ux == cx && uy == cy) return true;
  return false;
}

double ShapeSpec::distance(Vec2 p) const {
  double best = 1e300;
  for (const auto& [cx, cy] : cells) {
    double lox = (cx - center.x) * cell_size, hix = (cx + 1 - center.x) * cell_size;
    double loy = (cy - center.y) * cell_size, hiy = (cy + 1 - center.y) * cell_size;
    double dx = std::max({lox - p.x, 0.0, p.x - hix});
    double dy = std::max({loy - p.y, 0.0, p.y - hiy});
    best = std::min(best, std::hypot(dx, dy));
    if (best == 0.0) return 0.0;
  }
  return best;
}

bool Scene::tool_contains(Vec2 world) const {
  return shape.contains((world - tool_pos).rotated(-tool_theta));
}

bool Scene::plate_contains(Vec2 world) const {
  Vec2 m = (world - kit_pos).rotated(-kit_theta);
  return std::abs(m.x) <= plate_half && std::abs(m.y) <= plate_half;
}

bool Scene::cavity_contains(Vec2 world) const {
  if (!plate_contains(world)) return false;
  return shape.distance((world - kit_pos).rotated(-kit_theta)) <= clearance;
}

namespace {

using Cell = std::pair<int, int>;

bool has_cell(const std::vector<Cell>& cells, int x, int y) {
  return std::find(cells.begin(), cells.end(), Cell{x, y}) != cells.end();
}

bool connected(const std::vector<Cell>& cells) {
  if (cells.empty()) return false;
  std::set<Cell> todo(cells.begin(), cells.end());
  std::vector<Cell> stack = {cells[0]};
  todo.erase(cells[0]);
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    for (auto [dx, dy] : {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}}) {
      auto it = todo.find({x + dx, y + dy});
      if (it != todo.end()) {
        stack.push_back(*it);
        todo.erase(it);
      }
    }
  }
  return todo.empty();
}

bool has_hole(const std::vector<Cell>& cells) {
  // Flood the complement from outside an enlarged bounding box; any empty
  // cell inside the box that stays unreached is enclosed.
  int lox = 1 << 30, hix = -(1 << 30), loy = 1 << 30, hiy = -(1 << 30);
  for (auto [x, y] : cells) {
    lox = std::min(lox, x);
    hix = std::max(hix, x);
    loy = std::min(loy, y);
    hiy = std::max(hiy, y);
  }
  --lox, --loy, ++hix, ++hiy;
  std::set<Cell> seen;
  std::vector<Cell> stack = {{lox, loy}};
  seen.insert({lox, loy});
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    for (auto [dx, dy] : {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}}) {
      int nx = x + dx, ny = y + dy;
      if (nx < lox || nx > hix || ny < loy || ny > hiy) continue;
      if (has_cell(cells, nx, ny) || seen.count({nx, ny})) continue;
      seen.insert({nx, ny});
      stack.push_back({nx, ny});
    }
  }
  int total = (hix - lox + 1) * (hiy - loy + 1);
  return int(seen.size()) + int(cells.size()) != total;
}

// Outline of the cell union as one polygon loop (no holes by construction),
// collinear runs merged, vertices in unscaled cell-corner coordinates.
std::vector<Vec2> trace_outline(const std::vector<Cell>& cells) {
  // Directed boundary edges, counterclockwise around the filled region in
  // cell coordinates: for each cell edge lacking a filled neighbor, walk so
  // the interior is on the left.
  std::map<Cell, Cell> next;  // from corner -> to corner
  for (auto [x, y] : cells) {
    if (!has_cell(cells, x, y - 1)) next[{x, y}] = {x + 1, y};          // bottom
    if (!has_cell(cells, x + 1, y)) next[{x + 1, y}] = {x + 1, y + 1};  // right
    if (!has_cell(cells, x, y + 1)) next[{x + 1, y + 1}] = {x, y + 1};  // top
    if (!has_cell(cells, x - 1, y)) next[{x, y + 1}] = {x, y};          // left
  }
  std::vector<Cell> loop;
  Cell start = next.begin()->first;
  Cell cur = start;
  do {
    loop.push_back(cur);
    auto it = next.find(cur);
    if (it == next.end()) throw std::logic_error("broken outline");
    cur = it->second;
  } while (cur != start && loop.size() <= next.size());
  // Merge collinear runs.
  std::vector<Vec2> out;
  int n = int(loop.size());
  for (int i = 0; i < n; ++i) {
    Cell prev = loop[(i + n - 1) % n], here = loop[i], nxt = loop[(i + 1) % n];
    int ax = here.first - prev.first, ay = here.second - prev.second;
    int bx = nxt.first - here.first, by = nxt.second - here.second;
    if (ax * by - ay * bx != 0)
      out.push_back({double(here.first), double(here.second)});
  }
  return out;
}

ShapeSpec finish_shape(std::vector<Cell> cells, double diameter) {
  ShapeSpec s;
  s.cells = std::move(cells);
  double cx = 0, cy = 0;
  for (auto [x, y] : s.cells) {
    cx += x + 0.5;
    cy += y + 0.5;
  }
  s.center = {cx / double(s.cells.size()), cy / double(s.cells.size())};
  double r1 = 0.0;
  for (auto [x, y] : s.cells)
    for (int dx = 0; dx <= 1; ++dx)
      for (int dy = 0; dy <= 1; ++dy)
        r1 = std::max(r1, std::hypot(x + dx - s.center.x, y + dy - s.center.y));
  s.cell_size = diameter / (2.0 * r1);
  s.bounding_radius = r1 * s.cell_size;
  for (const Vec2& v : trace_outline(s.cells))
    s.polygon.push_back({(v.x - s.center.x) * s.cell_size,
                         (v.y - s.center.y) * s.cell_size});
  return s;
}

// Max silhouette IoU against its own C_36 rotations (excluding identity).
double asymmetry_iou(const ShapeSpec& s) {
  double r = s.bounding_radius + 0.5;
  const double step = 0.25;
  std::vector<Vec2> pts;
  std::vector<char> inside0;
  for (double y = -r; y <= r; y += step)
    for (double x = -r; x <= r; x += step) {
      pts.push_back({x, y});
      inside0.push_back(s.contains({x, y}));
    }
  double worst = 0.0;
  for (int i = 1; i < 36; ++i) {
    double theta = kTwoPi * i / 36.0;
    int both = 0, either = 0;
    for (size_t p = 0; p < pts.size(); ++p) {
      bool a = inside0[p];
      bool b = s.contains(pts[p].rotated(-theta));
      both += (a && b);
      either += (a || b);
    }
    if (either > 0) worst = std::max(worst, double(both) / double(either));
  }
  return worst;
}

std::vector<Cell> sample_polyomino(Rng& rng) {
  int target = 5 + rng.uniform_int(0, 4);  // 5..9 cells, one removed below
  std::vector<Cell> cells = {{0, 0}};
  int guard = 0;
  while (int(cells.size()) < target && ++guard < 500) {
    auto [x, y] = cells[rng.uniform_int(0, int(cells.size()) - 1)];
    static const Cell dirs[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    auto [dx, dy] = dirs[rng.uniform_int(0, 3)];
    if (!has_cell(cells, x + dx, y + dy)) cells.push_back({x + dx, y + dy});
  }
  if (int(cells.size()) < target) return {};
  // Remove one filled bounding-box corner cell for cheap asymmetry.
  int lox = 1 << 30, hix = -(1 << 30), loy = 1 << 30, hiy = -(1 << 30);
  for (auto [x, y] : cells) {
    lox = std::min(lox, x);
    hix = std::max(hix, x);
    loy = std::min(loy, y);
    hiy = std::max(hiy, y);
  }
  std::vector<Cell> corners;
  for (Cell c : {Cell{lox, loy}, Cell{lox, hiy}, Cell{hix, loy}, Cell{hix, hiy}})
    if (has_cell(cells, c.first, c.second)) corners.push_back(c);
  if (corners.empty()) return {};
  Cell victim = corners[rng.uniform_int(0, int(corners.size()) - 1)];
  cells.erase(std::find(cells.begin(), cells.end(), victim));
  if (!connected(cells) || has_hole(cells)) return {};
  return cells;
}

}  // namespace

Scene generate_episode(uint64_t seed, const EnvConfig& cfg) {
  Rng rng(hash64(seed));
  Scene scene;
  scene.seed = seed;
  scene.height = cfg.height;
  scene.width = cfg.width;
  scene.clearance = cfg.clearance;

  bool ok = false;
  for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
    std::vector<Cell> cells = sample_polyomino(rng);
    if (cells.empty()) continue;
    double diameter = rng.uniform(cfg.min_diameter, cfg.max_diameter);
    ShapeSpec shape = finish_shape(std::move(cells), diameter);
    if (asymmetry_iou(shape) > cfg.max_iou) continue;
    scene.shape = std::move(shape);
    ok = true;
  }
  if (!ok) throw std::runtime_error("shape generation rejection budget exhausted");

  scene.plate_half = scene.shape.bounding_radius + scene.clearance + 3.0;
  double kit_margin = scene.plate_half * std::sqrt(2.0) + 0.5;
  double tool_margin = scene.shape.bounding_radius + 1.0;
  double min_dist =
      scene.shape.bounding_radius + scene.plate_half * std::sqrt(2.0) + 2.0;
  ok = false;
  for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
    scene.kit_theta = rng.uniform(0.0, kTwoPi);
    scene.kit_pos = {rng.uniform(kit_margin, cfg.width - 1 - kit_margin),
                     rng.uniform(kit_margin, cfg.height - 1 - kit_margin)};
    scene.tool_theta = rng.uniform(0.0, kTwoPi);
    scene.tool_pos = {rng.uniform(tool_margin, cfg.width - 1 - tool_margin),
                      rng.uniform(tool_margin, cfg.height - 1 - tool_margin)};
    ok = (scene.tool_pos - scene.kit_pos).norm() >= min_dist;
  }
  if (!ok) throw std::runtime_error("pose sampling rejection budget exhausted");
  scene.state = ToolState::kOnTable;
  return scene;
}

Tensor render_observation(const Scene& scene) {
  int h = scene.height, w = scene.width;
  std::vector<double> img(size_t(h) * w, 0.0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          Vec2 p{c + (j + 0.5) / 4.0 - 0.5, r + (i + 0.5) / 4.0 - 0.5};
          double v = 0.0;
          if (scene.tool_contains(p))
            v = 0.4;
          else if (scene.plate_contains(p))
            v = scene.cavity_contains(p) ? 0.0 : 0.2;
          acc += v;
        }
      img[size_t(r) * w + c] = acc / 16.0;
    }
  return Tensor::from_data({1, h, w}, std::move(img));
}

Vec2 transform_point(const Scene& scene, Vec2 world, double dtheta, double dr,
                     double dc) {
  Vec2 ctr{(scene.width - 1) / 2.0, (scene.height - 1) / 2.0};
  Vec2 p = (world - ctr).rotated(dtheta) + ctr;
  return {p.x + dc, p.y + dr};
}

Scene transform_scene(const Scene& scene, double dtheta, double dr, double dc) {
  Scene out = scene;
  out.tool_pos = transform_point(scene, scene.tool_pos, dtheta, dr, dc);
  out.kit_pos = transform_point(scene, scene.kit_pos, dtheta, dr, dc);
  out.tool_theta = wrap_pos(scene.tool_theta + dtheta, kTwoPi);
  out.kit_theta = wrap_pos(scene.kit_theta + dtheta, kTwoPi);
  return out;
}

namespace {

// Nearest tool-interior pixel to the silhouette centroid; ties break to the
// lowest (row, col).
Action snap_pick_pixel(const Scene& scene) {
  int u0 = int(std::lround(scene.tool_pos.y));
  int v0 = int(std::lround(scene.tool_pos.x));
  if (scene.tool_contains({double(v0), double(u0)})) return {u0, v0, 0};
  int rad = int(std::ceil(scene.shape.bounding_radius)) + 1;
  double best_d = 1e300;
  Action best{u0, v0, 0};
  for (int u = std::max(0, u0 - rad); u <= std::min(scene.height - 1, u0 + rad); ++u)
    for (int v = std::max(0, v0 - rad); v <= std::min(scene.width - 1, v0 + rad); ++v) {
      if (!scene.tool_contains({double(v), double(u)})) continue;
      double d = std::hypot(u - scene.tool_pos.y, v - scene.tool_pos.x);
      if (d < best_d - 1e-12) {
        best_d = d;
        best = {u, v, 0};
      }
    }
  if (best_d == 1e300) throw std::runtime_error("tool has no interior pixel");
  return best;
}

}  // namespace

OracleActions oracle_actions(const Scene& scene, int n) {
  if (scene.state != ToolState::kOnTable)
    throw std::runtime_error("oracle requires the tool on the table");
  double bin = kTwoPi / n;
  OracleActions a;
  a.pick = snap_pick_pixel(scene);
  a.pick.theta_index =
      int(std::lround(wrap_pos(scene.tool_theta, kPi) / bin)) % (n / 2);

  double delta = wrap_pos(scene.kit_theta - scene.tool_theta, kTwoPi);
  Vec2 pick_pt{double(a.pick.v), double(a.pick.u)};
  Vec2 place_pt = (pick_pt - scene.tool_pos).rotated(delta) + scene.kit_pos;
  a.place.u = int(std::lround(place_pt.y));
  a.place.v = int(std::lround(place_pt.x));
  a.place.theta_index = int(std::lround(delta / bin)) % n;
  return a;
}

Scene apply_action(const Scene& scene, const Action& pick, const Action& place,
                   int n) {
  Vec2 pick_pt{double(pick.v), double(pick.u)};
  if (!scene.tool_contains(pick_pt)) return scene;  // failed grasp
  Scene out = scene;
  double dtheta = kTwoPi * place.theta_index / n;
  Vec2 material = (pick_pt - scene.tool_pos).rotated(-scene.tool_theta);
  out.tool_theta = wrap_pos(scene.tool_theta + dtheta, kTwoPi);
  Vec2 place_pt{double(place.v), double(place.u)};
  out.tool_pos = place_pt - material.rotated(out.tool_theta);
  out.state = check_success(out).success ? ToolState::kKitted : ToolState::kMisplaced;
  return out;
}

SuccessReport check_success(const Scene& scene) {
  SuccessReport rep;
  rep.translation_error = (scene.tool_pos - scene.kit_pos).norm();
  rep.rotation_error = wrap_signed(scene.tool_theta - scene.kit_theta);

  double r = scene.shape.bounding_radius + 1.0;
  int r0 = int(std::floor(scene.tool_pos.y - r)), r1 = int(std::ceil(scene.tool_pos.y + r));
  int c0 = int(std::floor(scene.tool_pos.x - r)), c1 = int(std::ceil(scene.tool_pos.x + r));
  for (int u = r0; u <= r1; ++u)
    for (int v = c0; v <= c1; ++v)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          Vec2 p{v + (j + 0.5) / 4.0 - 0.5, u + (i + 0.5) / 4.0 - 0.5};
          if (scene.tool_contains(p) && !scene.cavity_contains(p)) return rep;
        }
  rep.success = true;
  return rep;
}

}  // namespace histoport
