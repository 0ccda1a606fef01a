#pragma once

#include "pide/mesh.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

namespace pide {

class ProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Data of the model problem
///
///   u_t + A u + \int_0^t K(t - s) B u(s) ds = f,   u = 0 on the boundary,
///   B u = -div(alpha(u) grad u + beta(u)) + gamma(u) . grad u + g(u),
///
/// with A u = -div(D(x, t) grad u). Coefficient callbacks that are left
/// empty are treated as identically zero, and so are their derivatives.
struct ProblemSpec {
  using TensorFn = std::function<Mat2(double)>;
  using VectorFn = std::function<Vec2(double)>;
  using ScalarFn = std::function<double(double)>;

  std::function<Mat2(const Vec2&, double)> diffusion;
  bool diffusion_time_independent = true;

  TensorFn alpha, d_alpha;
  VectorFn beta, d_beta;
  VectorFn gamma, d_gamma;
  ScalarFn g, d_g;

  std::function<double(double)> kernel;
  std::function<double(const Vec2&, double)> forcing;
  std::function<double(const Vec2&)> u0;

  std::optional<std::function<double(const Vec2&, double)>> exact_solution;
  std::optional<std::function<Vec2(const Vec2&, double)>> exact_gradient;

  std::string name = "custom";

  /// Checks beta(0) = 0, g(0) = 0, symmetric diffusion at a few sample
  /// points, K(0) != 0 and that the mandatory callbacks are set.
  void validate(const Rectangle& domain = Rectangle::unit_square()) const;

  [[nodiscard]] bool alpha_is_zero() const { return !alpha; }
  [[nodiscard]] bool has_memory() const { return alpha || beta || gamma || g; }
};

/// Diffusion D = I.
std::function<Mat2(const Vec2&, double)> identity_diffusion();

}  // namespace pide
