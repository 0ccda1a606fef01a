#include "pide/problem.hpp"

#include <cmath>

namespace pide {

std::function<Mat2(const Vec2&, double)> identity_diffusion() {
  return [](const Vec2&, double) -> Mat2 { return Mat2::Identity(); };
}

void ProblemSpec::validate(const Rectangle& domain) const {
  if (!diffusion) throw ProblemError("problem '" + name + "': diffusion tensor not set");
  if (!kernel) throw ProblemError("problem '" + name + "': memory kernel not set");
  if (!forcing) throw ProblemError("problem '" + name + "': forcing not set");
  if (!u0) throw ProblemError("problem '" + name + "': initial data not set");
  if ((alpha && !d_alpha) || (beta && !d_beta) || (gamma && !d_gamma) || (g && !d_g)) {
    throw ProblemError("problem '" + name + "': coefficient given without its derivative");
  }
  if (beta && beta(0.0).norm() != 0.0) {
    throw ProblemError("problem '" + name + "': beta(0) must vanish");
  }
  if (g && g(0.0) != 0.0) throw ProblemError("problem '" + name + "': g(0) must vanish");
  if (kernel(0.0) == 0.0) {
    throw ProblemError("problem '" + name + "': K(0) = 0 gives a vanishing diagonal memory weight");
  }
  for (double fx : {0.1, 0.5, 0.9}) {
    for (double fy : {0.2, 0.5, 0.8}) {
      const Vec2 x(domain.ax + fx * (domain.bx - domain.ax), domain.ay + fy * (domain.by - domain.ay));
      const Mat2 d = diffusion(x, 0.0);
      if (std::abs(d(0, 1) - d(1, 0)) > 1e-14 * (1.0 + d.norm())) {
        throw ProblemError("problem '" + name + "': diffusion tensor is not symmetric");
      }
    }
  }
}

}  // namespace pide
