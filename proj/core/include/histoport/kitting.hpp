#pragma once
#include <cstdint>
#include <utility>
#include <vector>

#include "histoport/rng.hpp"
#include "histoport/tensor.hpp"

namespace histoport {

/// Discrete pick/place action.  (u, v) is a pixel (row, col); theta_index
/// indexes C_N bins: pick angles use N/2 bins over [0, pi) (absolute tool
/// orientation mod pi), place angles use N bins over [0, 2*pi) (orientation
/// change between pick and place).
struct Action {
  int u = 0, v = 0;
  int theta_index = 0;
  bool operator==(const Action&) const = default;
};

/// 2-D point in pixel units, x = column, y = row.
struct Vec2 {
  double x = 0.0, y = 0.0;
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 rotated(double theta) const;
  double norm() const;
};

/// Tool silhouette: a union of grid cells (a polyomino) scaled to pixel
/// units, centered on its area centroid, plus its traced outline polygon.
struct ShapeSpec {
  std::vector<std::pair<int, int>> cells;  // (cx, cy) integer cell coords
  double cell_size = 1.0;
  Vec2 center;  // area centroid in unscaled cell units
  std::vector<Vec2> polygon;  // outline vertices, model frame, pixel units
  double bounding_radius = 0.0;

  bool contains(Vec2 p) const;       // model-frame silhouette test
  double distance(Vec2 p) const;     // distance to silhouette, 0 inside
};

enum class ToolState { kOnTable, kKitted, kMisplaced };

struct Scene {
  ShapeSpec shape;
  Vec2 tool_pos;
  double tool_theta = 0.0;
  Vec2 kit_pos;
  double kit_theta = 0.0;
  double plate_half = 0.0;  // square kit plate half-extent, rotates with kit
  double clearance = 1.0;
  int height = 64, width = 64;
  ToolState state = ToolState::kOnTable;
  uint64_t seed = 0;

  bool tool_contains(Vec2 world) const;
  bool plate_contains(Vec2 world) const;
  /// Cavity = tool silhouette dilated by `clearance`, carved at the kit pose.
  bool cavity_contains(Vec2 world) const;
};

struct EnvConfig {
  int height = 64, width = 64;
  double clearance = 1.0;
  double min_diameter = 10.0, max_diameter = 14.0;
  double max_iou = 0.85;  // rotational-asymmetry bound, checked over C_36
};

/// Deterministic in seed.  Throws std::runtime_error when the rejection
/// budget (1000 attempts) is exhausted.
Scene generate_episode(uint64_t seed, const EnvConfig& cfg = {});

/// d=1 heightmap: background 0.0, plate 0.2 (cavity cells 0.0), tool 0.4;
/// 4x4 supersampling per pixel, box-averaged.
Tensor render_observation(const Scene& scene);

/// Rotate all poses by dtheta about the workspace center, then translate by
/// (dr, dc) pixels.  Used by augmentation and the render-equivariance tests.
Scene transform_scene(const Scene& scene, double dtheta, double dr, double dc);

/// Map a pixel through the same rigid transform (continuous, not rounded).
Vec2 transform_point(const Scene& scene, Vec2 world, double dtheta, double dr,
                     double dc);

struct OracleActions {
  Action pick;   // theta_index in [0, N/2)
  Action place;  // theta_index in [0, N)
};

/// Expert demonstrator: pick at the silhouette centroid (snapped to the
/// nearest tool-interior pixel), place at the image of the pick point under
/// the tool->cavity rigid map, angles rounded to C_N bins.
OracleActions oracle_actions(const Scene& scene, int n);

/// Geometric dynamics: failed grasp if the pick pixel is off the tool;
/// otherwise rotate the tool by the place-bin angle about the pick point and
/// translate the pick point onto the place point, then classify success.
Scene apply_action(const Scene& scene, const Action& pick, const Action& place,
                   int n);

struct SuccessReport {
  bool success = false;
  double translation_error = 0.0;  // px, silhouette-centroid distance
  double rotation_error = 0.0;     // radians in (-pi, pi]
};

/// Success iff the tool silhouette at its current pose lies inside the cavity
/// region (4x supersampled containment).
SuccessReport check_success(const Scene& scene);

}  // namespace histoport
