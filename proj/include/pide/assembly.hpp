#pragma once

#include "pide/mesh.hpp"
#include "pide/problem.hpp"
#include "pide/quadrature.hpp"

#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace pide {

/// Compressed row storage; column indices are sorted and unique per row.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

class AssemblyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// P1 space on a mesh: element geometry, the fixed sparsity pattern and the
/// map from element matrix entries to storage slots of that pattern.
class FeSpace {
 public:
  explicit FeSpace(MeshPtr mesh);

  [[nodiscard]] const Mesh& mesh() const { return *mesh_; }
  [[nodiscard]] const MeshPtr& mesh_ptr() const { return mesh_; }
  [[nodiscard]] int size() const { return mesh_->num_nodes(); }

  [[nodiscard]] double area(int t) const { return area_[static_cast<std::size_t>(t)]; }
  /// Constant gradients of the three local basis functions on triangle t.
  [[nodiscard]] const std::array<Vec2, 3>& basis_gradients(int t) const {
    return grads_[static_cast<std::size_t>(t)];
  }
  [[nodiscard]] const QuadratureRule& rule() const { return *rule_; }
  [[nodiscard]] int num_quad_points() const { return mesh_->num_triangles() * rule_->size(); }
  [[nodiscard]] Vec2 quad_point(int t, int q) const;

  /// Matrix with the full P1 pattern and all values zero.
  [[nodiscard]] SparseMatrix zero_matrix() const { return pattern_; }
  [[nodiscard]] int slot(int t, int a, int b) const {
    return slots_[static_cast<std::size_t>(9 * t + 3 * a + b)];
  }

  [[nodiscard]] std::size_t bytes() const;

 private:
  MeshPtr mesh_;
  const QuadratureRule* rule_;
  std::vector<double> area_;
  std::vector<std::array<Vec2, 3>> grads_;
  SparseMatrix pattern_;
  std::vector<int> slots_;
};

using FeSpacePtr = std::shared_ptr<const FeSpace>;

FeSpacePtr make_space(MeshPtr mesh);

/// Values and gradients of a function at every quadrature point of a space,
/// laid out as [triangle * rule.size() + q].
struct QuadField {
  std::vector<double> value;
  std::vector<Vec2> grad;

  [[nodiscard]] std::size_t size() const { return value.size(); }
};

/// Evaluates a P1 function living on the same mesh as the space.
QuadField quad_field(const FeSpace& space, const FeFunction& u);
QuadField zero_quad_field(const FeSpace& space);

/// Locations of the quadrature points of a target space inside a source mesh.
/// The meshes need not be nested.
class QuadTransfer {
 public:
  QuadTransfer(const FeSpace& target, FeSpacePtr source);

  /// Evaluates a function on the source mesh at the target quadrature points.
  [[nodiscard]] QuadField apply(const FeFunction& u) const;
  [[nodiscard]] const FeSpace& source() const { return *source_; }
  [[nodiscard]] const PointLocation& location(std::size_t k) const { return locations_[k]; }
  [[nodiscard]] std::size_t size() const { return locations_.size(); }

 private:
  FeSpacePtr source_;
  std::vector<PointLocation> locations_;
};

SparseMatrix assemble_mass(const FeSpace& space);
SparseMatrix assemble_stiffness(const FeSpace& space,
                                const std::function<Mat2(const Vec2&, double)>& diffusion, double t);

enum class FormVariant {
  full_B,             ///< B(u, v), with w = u
  linearized_Btilde,  ///< B~(w; u, v) = (alpha(w) grad u + beta(w), grad v) + (gamma(w) . grad u + g(w), v)
  symmetric_Bs,       ///< B~s(w; u, v) = (alpha(w) grad u, grad v)
  lower_order_N,      ///< N(w; u, v) = (beta(w), grad v) + (gamma(w) . grad u + g(w), v)
};

/// Entries <form(w; u), phi_j> for every basis function. For full_B only u is
/// used. Boundary entries are left in place; the caller eliminates them.
Vector assemble_B_vector(const FeSpace& space, const QuadField& w, const QuadField& u,
                         const ProblemSpec& spec, FormVariant variant);

/// Matrix of the u-dependent part of B~ (alpha and gamma terms) or of B~s,
/// with coefficients frozen at w.
SparseMatrix assemble_Btilde_matrix(const FeSpace& space, const QuadField& w, const ProblemSpec& spec,
                                    FormVariant variant);

/// Derivative of u -> B(u, phi_j) with respect to the nodal values of u.
SparseMatrix assemble_B_jacobian(const FeSpace& space, const QuadField& u, const ProblemSpec& spec);

/// sum_i weights[i] * N(w_i; w_i, phi_j), with the w_i given as nodal vectors
/// on the transfer's source mesh and evaluated at this space's quadrature
/// points. This is the whole memory term of the fine step when alpha = 0.
Vector assemble_weighted_lower_order(const FeSpace& space, const QuadTransfer& transfer,
                                     std::span<const Vector* const> states, std::span<const double> weights,
                                     const ProblemSpec& spec);

/// (f, phi_j) with degree-4 quadrature.
Vector assemble_load(const FeSpace& space, const std::function<double(const Vec2&)>& f);

/// Symmetric elimination of homogeneous Dirichlet nodes: boundary rows and
/// columns become identity rows/columns and boundary rhs entries zero.
void apply_dirichlet(SparseMatrix& matrix, Vector& rhs, const std::vector<char>& mask);
void apply_dirichlet(SparseMatrix& matrix, const std::vector<char>& mask);
void zero_boundary_entries(Vector& v, const std::vector<char>& mask);

}  // namespace pide
