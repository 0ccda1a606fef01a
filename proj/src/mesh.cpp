#include "pide/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pide {

namespace {

// Relative tolerance for deciding that a point sits on a grid line.
constexpr double kGridTol = 1e-12;

// Candidate cell indices along one axis, ascending.
std::array<int, 2> axis_candidates(double s, int n, int& count) {
  const double r = std::round(s);
  if (std::abs(s - r) <= kGridTol * std::max(1.0, std::abs(s))) {
    const int k = static_cast<int>(r);
    count = 0;
    std::array<int, 2> out{};
    if (k - 1 >= 0) out[count++] = k - 1;
    if (k <= n - 1) out[count++] = k;
    return out;
  }
  count = 1;
  return {std::clamp(static_cast<int>(std::floor(s)), 0, n - 1), 0};
}

}  // namespace

Mesh::Mesh(int nx, int ny, const Rectangle& domain) : nx_(nx), ny_(ny), domain_(domain) {
  if (nx < 1 || ny < 1) {
    throw MeshError("build_mesh: subdivisions must be >= 1 (got " + std::to_string(nx) + "x" +
                    std::to_string(ny) + ")");
  }
  if (!(domain.bx > domain.ax) || !(domain.by > domain.ay)) {
    throw MeshError("build_mesh: degenerate rectangle");
  }
  hx_ = (domain.bx - domain.ax) / nx;
  hy_ = (domain.by - domain.ay) / ny;

  const int npx = nx + 1;
  nodes_.reserve(static_cast<std::size_t>(npx * (ny + 1)));
  boundary_.reserve(nodes_.capacity());
  for (int j = 0; j <= ny; ++j) {
    // Endpoints are set exactly so boundary coordinates carry no rounding.
    const double y = j == ny ? domain.by : domain.ay + j * hy_;
    for (int i = 0; i <= nx; ++i) {
      const double x = i == nx ? domain.bx : domain.ax + i * hx_;
      nodes_.emplace_back(x, y);
      boundary_.push_back(i == 0 || i == nx || j == 0 || j == ny ? 1 : 0);
    }
  }

  triangles_.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = j * npx + i;
      const int v10 = v00 + 1;
      const int v01 = v00 + npx;
      const int v11 = v01 + 1;
      triangles_.push_back({v00, v10, v11});
      triangles_.push_back({v00, v11, v01});
    }
  }
}

int Mesh::num_boundary_nodes() const {
  return static_cast<int>(std::count(boundary_.begin(), boundary_.end(), char{1}));
}

double Mesh::signed_area(int t) const {
  const auto& tri = triangle(t);
  const Vec2 e1 = node(tri[1]) - node(tri[0]);
  const Vec2 e2 = node(tri[2]) - node(tri[0]);
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

MeshPtr build_mesh(int nx, int ny, const Rectangle& domain) {
  return std::make_shared<const Mesh>(nx, ny, domain);
}

PointLocation locate_point(const Mesh& mesh, const Vec2& p) {
  const Rectangle& d = mesh.domain();
  const double tol_x = kGridTol * (d.bx - d.ax);
  const double tol_y = kGridTol * (d.by - d.ay);
  if (!(p.x() >= d.ax - tol_x && p.x() <= d.bx + tol_x && p.y() >= d.ay - tol_y &&
        p.y() <= d.by + tol_y)) {
    throw MeshError("locate_point: point (" + std::to_string(p.x()) + ", " +
                    std::to_string(p.y()) + ") outside domain");
  }
  const double sx = (p.x() - d.ax) / mesh.hx();
  const double sy = (p.y() - d.ay) / mesh.hy();

  int ci = 0;
  int cj = 0;
  const auto is = axis_candidates(sx, mesh.nx(), ci);
  const auto js = axis_candidates(sy, mesh.ny(), cj);

  constexpr double kInside = -1e-12;
  for (int b = 0; b < cj; ++b) {
    for (int a = 0; a < ci; ++a) {
      const int i = is[static_cast<std::size_t>(a)];
      const int j = js[static_cast<std::size_t>(b)];
      const double xi = std::clamp(sx - i, 0.0, 1.0);
      const double eta = std::clamp(sy - j, 0.0, 1.0);
      const int cell = j * mesh.nx() + i;
      // Lower-right triangle (v00, v10, v11).
      std::array<double, 3> lam{1.0 - xi, xi - eta, eta};
      int tri = 2 * cell;
      if (lam[1] < kInside) {
        // Upper-left triangle (v00, v11, v01).
        lam = {1.0 - eta, xi, eta - xi};
        tri = 2 * cell + 1;
        if (lam[2] < kInside) continue;
      }
      for (double& l : lam) l = std::max(l, 0.0);
      const double s = lam[0] + lam[1] + lam[2];
      for (double& l : lam) l /= s;
      return {tri, lam};
    }
  }
  // Unreachable for points inside the closed rectangle.
  throw MeshError("locate_point: no containing triangle");
}

FeFunction::FeFunction(MeshPtr m, Vector c) : mesh(std::move(m)), coeffs(std::move(c)) {
  if (coeffs.size() != mesh->num_nodes()) {
    throw MeshError("FeFunction: coefficient count " + std::to_string(coeffs.size()) +
                    " does not match node count " + std::to_string(mesh->num_nodes()));
  }
}

FeFunction::FeFunction(MeshPtr m) : mesh(std::move(m)) { coeffs = Vector::Zero(mesh->num_nodes()); }

double FeFunction::value_at(const Vec2& p) const {
  const PointLocation loc = locate_point(*mesh, p);
  const auto& tri = mesh->triangle(loc.triangle);
  return loc.barycentric[0] * coeffs[tri[0]] + loc.barycentric[1] * coeffs[tri[1]] +
         loc.barycentric[2] * coeffs[tri[2]];
}

void zero_boundary(FeFunction& u) {
  for (int i = 0; i < u.mesh->num_nodes(); ++i) {
    if (u.mesh->is_boundary(i)) u.coeffs[i] = 0.0;
  }
}

std::vector<double> eval_on_mesh(const FeFunction& source, std::span<const Vec2> points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const Vec2& p : points) out.push_back(source.value_at(p));
  return out;
}

}  // namespace pide
