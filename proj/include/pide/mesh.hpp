#pragma once

#include <Eigen/Core>

#include <array>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace pide {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vector = Eigen::VectorXd;

class MeshError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Axis-aligned rectangle (ax, bx) x (ay, by).
struct Rectangle {
  double ax = 0.0;
  double bx = 1.0;
  double ay = 0.0;
  double by = 1.0;

  [[nodiscard]] double area() const { return (bx - ax) * (by - ay); }
  static Rectangle unit_square() { return {}; }
};

/// Structured triangulation of a rectangle.
///
/// Node (i, j) has index j * (nx + 1) + i. Cell (i, j) has corners
/// v00, v10, v11, v01 and is split along the v00-v11 diagonal into
/// triangle 2c = (v00, v10, v11) and triangle 2c + 1 = (v00, v11, v01),
/// where c = j * nx + i. Both are counterclockwise.
class Mesh {
 public:
  Mesh(int nx, int ny, const Rectangle& domain);

  [[nodiscard]] int nx() const { return nx_; }
  [[nodiscard]] int ny() const { return ny_; }
  [[nodiscard]] const Rectangle& domain() const { return domain_; }
  [[nodiscard]] double hx() const { return hx_; }
  [[nodiscard]] double hy() const { return hy_; }

  [[nodiscard]] int num_nodes() const { return static_cast<int>(nodes_.size()); }
  [[nodiscard]] int num_triangles() const { return static_cast<int>(triangles_.size()); }

  [[nodiscard]] const Vec2& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] std::span<const Vec2> nodes() const { return nodes_; }
  [[nodiscard]] const std::array<int, 3>& triangle(int t) const {
    return triangles_[static_cast<std::size_t>(t)];
  }
  [[nodiscard]] std::span<const std::array<int, 3>> triangles() const { return triangles_; }

  [[nodiscard]] bool is_boundary(int node) const {
    return boundary_[static_cast<std::size_t>(node)] != 0;
  }
  [[nodiscard]] const std::vector<char>& boundary_mask() const { return boundary_; }
  [[nodiscard]] int num_boundary_nodes() const;

  /// Signed area of triangle t (positive for every triangle of a valid mesh).
  [[nodiscard]] double signed_area(int t) const;

 private:
  int nx_;
  int ny_;
  Rectangle domain_;
  double hx_;
  double hy_;
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<char> boundary_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

MeshPtr build_mesh(int nx, int ny, const Rectangle& domain = Rectangle::unit_square());

struct PointLocation {
  int triangle = -1;
  std::array<double, 3> barycentric{};
};

/// O(1) point location. Points on shared edges or vertices resolve to the
/// lowest-index triangle containing them.
PointLocation locate_point(const Mesh& mesh, const Vec2& p);

/// Nodal P1 function on a mesh.
struct FeFunction {
  MeshPtr mesh;
  Vector coeffs;

  FeFunction() = default;
  FeFunction(MeshPtr m, Vector c);
  explicit FeFunction(MeshPtr m);

  [[nodiscard]] double value_at(const Vec2& p) const;
};

template <typename F>
FeFunction interpolate(const MeshPtr& mesh, F&& f) {
  Vector c(mesh->num_nodes());
  for (int i = 0; i < mesh->num_nodes(); ++i) c[i] = f(mesh->node(i));
  return FeFunction(mesh, std::move(c));
}

/// Zeroes the coefficients at Dirichlet boundary nodes.
void zero_boundary(FeFunction& u);

/// Values of a P1 function at arbitrary points of its domain.
std::vector<double> eval_on_mesh(const FeFunction& source, std::span<const Vec2> points);

}  // namespace pide
