#pragma once

#include <array>
#include <vector>

namespace pide {

/// Quadrature on the reference triangle in barycentric coordinates.
/// Weights are normalised to sum to 1; multiply by the triangle area.
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;

  [[nodiscard]] int size() const { return static_cast<int>(weights.size()); }
};

/// Symmetric 6-point rule, exact for polynomials of degree 4.
const QuadratureRule& triangle_rule_degree4();

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussLegendre gauss_legendre(int n);

/// Composite Gauss-Legendre integration over [a, b] with `panels` equal panels.
template <typename F>
double integrate_gl(F&& f, double a, double b, const GaussLegendre& gl, int panels = 1) {
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double half = 0.5 * width;
    const double mid = lo + half;
    double s = 0.0;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) s += gl.weights[k] * f(mid + half * gl.nodes[k]);
    total += half * s;
  }
  return total;
}

}  // namespace pide
