#include "pide/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pide {

const QuadratureRule& triangle_rule_degree4() {
  static const QuadratureRule rule = [] {
    constexpr double a = 0.44594849091596488632;
    constexpr double wa = 0.22338158967801146570;
    constexpr double b = 0.091576213509770743460;
    constexpr double wb = 0.10995174365532186764;
    QuadratureRule r;
    r.degree = 4;
    r.points = {{a, a, 1.0 - 2.0 * a}, {a, 1.0 - 2.0 * a, a}, {1.0 - 2.0 * a, a, a},
                {b, b, 1.0 - 2.0 * b}, {b, 1.0 - 2.0 * b, b}, {1.0 - 2.0 * b, b, b}};
    r.weights = {wa, wa, wa, wb, wb, wb};
    return r;
  }();
  return rule;
}

GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  GaussLegendre gl;
  gl.nodes.resize(static_cast<std::size_t>(n));
  gl.weights.resize(static_cast<std::size_t>(n));
  // Newton iteration on P_n from the Chebyshev-like initial guesses.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      const double pn = n == 1 ? x : p1;
      dp = n * (x * pn - p0) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.nodes[static_cast<std::size_t>(i)] = -x;
    gl.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    gl.weights[static_cast<std::size_t>(i)] = w;
    gl.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return gl;
}

}  // namespace pide
