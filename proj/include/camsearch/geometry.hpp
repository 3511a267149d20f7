// Scalar-generic geometry kernels shared by projection, occlusion and
// rasterization. Everything above this header works in double.
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace camsearch {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Box3 = Eigen::AlignedBox<Scalar, 3>;

using Vec3 = Vector3<double>;
using Vec2 = Vector2<double>;
using Box3d = Box3<double>;

inline const Vec3 kWorldUp = Vec3::UnitZ();

/// Positive-volume overlap. Boxes that only share a face do not overlap.
template <typename Scalar>
bool overlaps(const Box3<Scalar>& a, const Box3<Scalar>& b) {
  return (a.min().array() < b.max().array()).all() &&
         (b.min().array() < a.max().array()).all();
}

/// Open-interior containment.
template <typename Scalar>
bool interior_contains(const Box3<Scalar>& box, const Vector3<Scalar>& p) {
  return (box.min().array() < p.array()).all() && (p.array() < box.max().array()).all();
}

template <typename Scalar>
Scalar box_volume(const Box3<Scalar>& box) {
  if (box.isEmpty()) return Scalar(0);
  return box.sizes().prod();
}

/// Slab test. Returns the entry parameter t of the segment from + t (to - from)
/// into the box when the segment crosses the box for some t in (t_lo, t_hi).
template <typename Scalar>
std::optional<Scalar> segment_box_hit(const Vector3<Scalar>& from, const Vector3<Scalar>& to,
                                      const Box3<Scalar>& box, Scalar t_lo = Scalar(0),
                                      Scalar t_hi = Scalar(1)) {
  const Vector3<Scalar> dir = to - from;
  Scalar enter = t_lo;
  Scalar leave = t_hi;
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(dir[axis]) < std::numeric_limits<Scalar>::epsilon()) {
      if (from[axis] <= box.min()[axis] || from[axis] >= box.max()[axis]) return std::nullopt;
      continue;
    }
    Scalar t0 = (box.min()[axis] - from[axis]) / dir[axis];
    Scalar t1 = (box.max()[axis] - from[axis]) / dir[axis];
    if (t0 > t1) std::swap(t0, t1);
    enter = std::max(enter, t0);
    leave = std::min(leave, t1);
    if (enter >= leave) return std::nullopt;
  }
  return enter;
}

/// Pinhole camera frame with zero roll. Image axes: u grows right, v grows
/// down, both normalized to [0, 1] over the frame.
template <typename Scalar>
struct CameraFrame {
  Vector3<Scalar> origin;
  Vector3<Scalar> forward;
  Vector3<Scalar> right;
  Vector3<Scalar> up;
  Scalar tan_half_h;
  Scalar tan_half_v;

  Vector3<Scalar> to_camera(const Vector3<Scalar>& world) const {
    const Vector3<Scalar> rel = world - origin;
    return {rel.dot(right), rel.dot(up), rel.dot(forward)};
  }

  /// Camera-space point (x, y, depth) to normalized screen coordinates.
  Vector2<Scalar> to_screen(const Vector3<Scalar>& cam) const {
    return {Scalar(0.5) + Scalar(0.5) * cam.x() / (cam.z() * tan_half_h),
            Scalar(0.5) - Scalar(0.5) * cam.y() / (cam.z() * tan_half_v)};
  }

  /// World-space direction through normalized screen coordinates.
  Vector3<Scalar> ray_direction(Scalar u, Scalar v) const {
    const Scalar x = (Scalar(2) * u - Scalar(1)) * tan_half_h;
    const Scalar y = (Scalar(1) - Scalar(2) * v) * tan_half_v;
    return (forward + x * right + y * up).normalized();
  }
};

/// Builds a zero-roll frame. `sensor_width` and `focal` share units (mm);
/// the sensor height is sensor_width / aspect.
template <typename Scalar>
CameraFrame<Scalar> make_frame(const Vector3<Scalar>& position, const Vector3<Scalar>& look_at,
                               Scalar focal, Scalar aspect, Scalar sensor_width) {
  const Vector3<Scalar> view = look_at - position;
  if (!(view.norm() > Scalar(1e-9))) throw std::invalid_argument("camera position equals look-at");
  CameraFrame<Scalar> frame;
  frame.origin = position;
  frame.forward = view.normalized();
  Vector3<Scalar> right = frame.forward.cross(Vector3<Scalar>::UnitZ());
  if (right.norm() < Scalar(1e-9)) right = Vector3<Scalar>::UnitX();
  frame.right = right.normalized();
  frame.up = frame.right.cross(frame.forward).normalized();
  frame.tan_half_h = (sensor_width / Scalar(2)) / focal;
  frame.tan_half_v = frame.tan_half_h / aspect;
  return frame;
}

/// The 8 corners of a box, index bit i selects max on axis i.
template <typename Scalar>
std::array<Vector3<Scalar>, 8> box_corners(const Box3<Scalar>& box) {
  std::array<Vector3<Scalar>, 8> out;
  for (int i = 0; i < 8; ++i)
    for (int axis = 0; axis < 3; ++axis)
      out[i][axis] = (i >> axis) & 1 ? box.max()[axis] : box.min()[axis];
  return out;
}

/// Corner-index pairs for the 12 box edges.
inline constexpr std::array<std::array<int, 2>, 12> kBoxEdges{{{0, 1}, {2, 3}, {4, 5}, {6, 7},
                                                               {0, 2}, {1, 3}, {4, 6}, {5, 7},
                                                               {0, 4}, {1, 5}, {2, 6}, {3, 7}}};

/// Faces as corner loops (counter-clockwise seen from outside) with outward
/// normal axis and sign: -x, +x, -y, +y, -z, +z.
struct BoxFace {
  std::array<int, 4> corners;
  int axis;
  int sign;
};
inline constexpr std::array<BoxFace, 6> kBoxFaces{{{{0, 4, 6, 2}, 0, -1},
                                                   {{1, 3, 7, 5}, 0, +1},
                                                   {{0, 1, 5, 4}, 1, -1},
                                                   {{2, 6, 7, 3}, 1, +1},
                                                   {{0, 2, 3, 1}, 2, -1},
                                                   {{4, 5, 7, 6}, 2, +1}}};

}  // namespace camsearch
