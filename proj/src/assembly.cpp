#include "pide/assembly.hpp"

#include <cmath>
#include <string>

namespace pide {

namespace {

void check_field(const FeSpace& space, const QuadField& f, const char* what) {
  if (f.value.size() != static_cast<std::size_t>(space.num_quad_points()) || f.grad.size() != f.value.size()) {
    throw AssemblyError(std::string("assembly: quadrature field '") + what + "' has " +
                        std::to_string(f.value.size()) + " entries, expected " +
                        std::to_string(space.num_quad_points()));
  }
}

// Scatters element vectors in triangle order.
void scatter(const Mesh& mesh, int t, const std::array<double, 3>& local, Vector& out) {
  const auto& tri = mesh.triangle(t);
  for (int a = 0; a < 3; ++a) out[tri[static_cast<std::size_t>(a)]] += local[static_cast<std::size_t>(a)];
}

}  // namespace

FeSpace::FeSpace(MeshPtr mesh) : mesh_(std::move(mesh)), rule_(&triangle_rule_degree4()) {
  const int nt = mesh_->num_triangles();
  area_.resize(static_cast<std::size_t>(nt));
  grads_.resize(static_cast<std::size_t>(nt));
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(static_cast<std::size_t>(9 * nt));
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh_->triangle(t);
    const Vec2& p0 = mesh_->node(tri[0]);
    const Vec2& p1 = mesh_->node(tri[1]);
    const Vec2& p2 = mesh_->node(tri[2]);
    const double det = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
    area_[static_cast<std::size_t>(t)] = 0.5 * det;
    grads_[static_cast<std::size_t>(t)] = {Vec2(p1.y() - p2.y(), p2.x() - p1.x()) / det,
                                           Vec2(p2.y() - p0.y(), p0.x() - p2.x()) / det,
                                           Vec2(p0.y() - p1.y(), p1.x() - p0.x()) / det};
    for (int a : tri) {
      for (int b : tri) trips.emplace_back(a, b, 0.0);
    }
  }
  pattern_.resize(size(), size());
  pattern_.setFromTriplets(trips.begin(), trips.end());
  pattern_.makeCompressed();

  slots_.resize(static_cast<std::size_t>(9 * nt));
  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh_->triangle(t);
    for (int a = 0; a < 3; ++a) {
      const int row = tri[static_cast<std::size_t>(a)];
      for (int b = 0; b < 3; ++b) {
        const int col = tri[static_cast<std::size_t>(b)];
        const int* first = inner + outer[row];
        const int* last = inner + outer[row + 1];
        const int* it = std::lower_bound(first, last, col);
        slots_[static_cast<std::size_t>(9 * t + 3 * a + b)] = static_cast<int>(it - inner);
      }
    }
  }
}

Vec2 FeSpace::quad_point(int t, int q) const {
  const auto& tri = mesh_->triangle(t);
  const auto& lam = rule_->points[static_cast<std::size_t>(q)];
  return lam[0] * mesh_->node(tri[0]) + lam[1] * mesh_->node(tri[1]) + lam[2] * mesh_->node(tri[2]);
}

std::size_t FeSpace::bytes() const {
  return area_.size() * sizeof(double) + grads_.size() * sizeof(std::array<Vec2, 3>) +
         slots_.size() * sizeof(int) +
         static_cast<std::size_t>(pattern_.nonZeros()) * (sizeof(double) + sizeof(int));
}

FeSpacePtr make_space(MeshPtr mesh) { return std::make_shared<const FeSpace>(std::move(mesh)); }

QuadField quad_field(const FeSpace& space, const FeFunction& u) {
  if (u.mesh.get() != &space.mesh() && u.mesh->num_nodes() != space.size()) {
    throw AssemblyError("quad_field: function lives on a different mesh; use QuadTransfer");
  }
  if (u.coeffs.size() != space.size()) throw AssemblyError("quad_field: dimension mismatch");
  const Mesh& mesh = space.mesh();
  const auto& rule = space.rule();
  const int nq = rule.size();
  QuadField f;
  f.value.resize(static_cast<std::size_t>(space.num_quad_points()));
  f.grad.resize(f.value.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    const auto& gr = space.basis_gradients(t);
    const double u0 = u.coeffs[tri[0]];
    const double u1 = u.coeffs[tri[1]];
    const double u2 = u.coeffs[tri[2]];
    const Vec2 grad = u0 * gr[0] + u1 * gr[1] + u2 * gr[2];
    for (int q = 0; q < nq; ++q) {
      const auto& lam = rule.points[static_cast<std::size_t>(q)];
      const auto k = static_cast<std::size_t>(t * nq + q);
      f.value[k] = lam[0] * u0 + lam[1] * u1 + lam[2] * u2;
      f.grad[k] = grad;
    }
  }
  return f;
}

QuadField zero_quad_field(const FeSpace& space) {
  QuadField f;
  f.value.assign(static_cast<std::size_t>(space.num_quad_points()), 0.0);
  f.grad.assign(f.value.size(), Vec2::Zero());
  return f;
}

QuadTransfer::QuadTransfer(const FeSpace& target, FeSpacePtr source) : source_(std::move(source)) {
  locations_.reserve(static_cast<std::size_t>(target.num_quad_points()));
  const int nq = target.rule().size();
  for (int t = 0; t < target.mesh().num_triangles(); ++t) {
    for (int q = 0; q < nq; ++q) locations_.push_back(locate_point(source_->mesh(), target.quad_point(t, q)));
  }
}

QuadField QuadTransfer::apply(const FeFunction& u) const {
  if (u.coeffs.size() != source_->size()) throw AssemblyError("QuadTransfer: source dimension mismatch");
  const Mesh& mesh = source_->mesh();
  QuadField f;
  f.value.resize(locations_.size());
  f.grad.resize(locations_.size());
  for (std::size_t k = 0; k < locations_.size(); ++k) {
    const PointLocation& loc = locations_[k];
    const auto& tri = mesh.triangle(loc.triangle);
    const auto& gr = source_->basis_gradients(loc.triangle);
    const double u0 = u.coeffs[tri[0]];
    const double u1 = u.coeffs[tri[1]];
    const double u2 = u.coeffs[tri[2]];
    f.value[k] = loc.barycentric[0] * u0 + loc.barycentric[1] * u1 + loc.barycentric[2] * u2;
    f.grad[k] = u0 * gr[0] + u1 * gr[1] + u2 * gr[2];
  }
  return f;
}

SparseMatrix assemble_mass(const FeSpace& space) {
  SparseMatrix m = space.zero_matrix();
  double* val = m.valuePtr();
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const double diag = space.area(t) / 6.0;
    const double off = space.area(t) / 12.0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) val[space.slot(t, a, b)] += a == b ? diag : off;
    }
  }
  return m;
}

SparseMatrix assemble_stiffness(const FeSpace& space,
                                const std::function<Mat2(const Vec2&, double)>& diffusion, double t) {
  SparseMatrix k = space.zero_matrix();
  double* val = k.valuePtr();
  const auto& rule = space.rule();
  for (int e = 0; e < space.mesh().num_triangles(); ++e) {
    Mat2 d = Mat2::Zero();
    for (int q = 0; q < rule.size(); ++q) {
      const Mat2 dq = diffusion(space.quad_point(e, q), t);
      if (std::abs(dq(0, 1) - dq(1, 0)) > 1e-14 * (1.0 + dq.norm())) {
        throw AssemblyError("assemble_stiffness: diffusion tensor is not symmetric");
      }
      d += rule.weights[static_cast<std::size_t>(q)] * dq;
    }
    const auto& gr = space.basis_gradients(e);
    const double area = space.area(e);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        val[space.slot(e, a, b)] += area * gr[static_cast<std::size_t>(a)].dot(d * gr[static_cast<std::size_t>(b)]);
      }
    }
  }
  return k;
}

Vector assemble_B_vector(const FeSpace& space, const QuadField& w, const QuadField& u, const ProblemSpec& spec,
                         FormVariant variant) {
  check_field(space, u, "u");
  const bool full = variant == FormVariant::full_B;
  const QuadField& coef = full ? u : w;
  if (!full) check_field(space, w, "w");
  const bool use_alpha = variant != FormVariant::lower_order_N && static_cast<bool>(spec.alpha);
  const bool use_lower = variant != FormVariant::symmetric_Bs;

  const Mesh& mesh = space.mesh();
  const auto& rule = space.rule();
  const int nq = rule.size();
  Vector out = Vector::Zero(space.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& gr = space.basis_gradients(t);
    const double area = space.area(t);
    std::array<double, 3> local{};
    for (int q = 0; q < nq; ++q) {
      const auto k = static_cast<std::size_t>(t * nq + q);
      const double wv = coef.value[k];
      const Vec2& du = u.grad[k];
      Vec2 flux = Vec2::Zero();
      double source = 0.0;
      if (use_alpha) flux += spec.alpha(wv) * du;
      if (use_lower) {
        if (spec.beta) flux += spec.beta(wv);
        if (spec.gamma) source += spec.gamma(wv).dot(du);
        if (spec.g) source += spec.g(wv);
      }
      const double wq = rule.weights[static_cast<std::size_t>(q)] * area;
      const auto& lam = rule.points[static_cast<std::size_t>(q)];
      for (std::size_t a = 0; a < 3; ++a) local[a] += wq * (flux.dot(gr[a]) + source * lam[a]);
    }
    scatter(mesh, t, local, out);
  }
  return out;
}

SparseMatrix assemble_Btilde_matrix(const FeSpace& space, const QuadField& w, const ProblemSpec& spec,
                                    FormVariant variant) {
  if (variant != FormVariant::linearized_Btilde && variant != FormVariant::symmetric_Bs) {
    throw AssemblyError("assemble_Btilde_matrix: variant must be linearized_Btilde or symmetric_Bs");
  }
  check_field(space, w, "w");
  SparseMatrix m = space.zero_matrix();
  const bool use_gamma = variant == FormVariant::linearized_Btilde && static_cast<bool>(spec.gamma);
  if (!spec.alpha && !use_gamma) return m;

  double* val = m.valuePtr();
  const auto& rule = space.rule();
  const int nq = rule.size();
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto& gr = space.basis_gradients(t);
    const double area = space.area(t);
    Mat2 alpha_avg = Mat2::Zero();
    Eigen::Matrix<double, 3, 3> local = Eigen::Matrix<double, 3, 3>::Zero();
    for (int q = 0; q < nq; ++q) {
      const auto k = static_cast<std::size_t>(t * nq + q);
      const double wq = rule.weights[static_cast<std::size_t>(q)] * area;
      if (spec.alpha) alpha_avg += wq * spec.alpha(w.value[k]);
      if (use_gamma) {
        const Vec2 c = spec.gamma(w.value[k]);
        const auto& lam = rule.points[static_cast<std::size_t>(q)];
        for (std::size_t a = 0; a < 3; ++a) {
          for (std::size_t b = 0; b < 3; ++b) {
            local(static_cast<int>(a), static_cast<int>(b)) += wq * c.dot(gr[b]) * lam[a];
          }
        }
      }
    }
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 3; ++b) {
        double v = local(static_cast<int>(a), static_cast<int>(b));
        if (spec.alpha) v += gr[a].dot(alpha_avg * gr[b]);
        val[space.slot(t, static_cast<int>(a), static_cast<int>(b))] += v;
      }
    }
  }
  return m;
}

SparseMatrix assemble_B_jacobian(const FeSpace& space, const QuadField& u, const ProblemSpec& spec) {
  check_field(space, u, "u");
  SparseMatrix m = space.zero_matrix();
  if (!spec.has_memory()) return m;
  double* val = m.valuePtr();
  const auto& rule = space.rule();
  const int nq = rule.size();
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto& gr = space.basis_gradients(t);
    const double area = space.area(t);
    Eigen::Matrix<double, 3, 3> local = Eigen::Matrix<double, 3, 3>::Zero();
    for (int q = 0; q < nq; ++q) {
      const auto k = static_cast<std::size_t>(t * nq + q);
      const double uv = u.value[k];
      const Vec2& du = u.grad[k];
      const double wq = rule.weights[static_cast<std::size_t>(q)] * area;
      const auto& lam = rule.points[static_cast<std::size_t>(q)];

      // d(flux)/du_b = (alpha'(u) grad u + beta'(u)) phi_b + alpha(u) grad phi_b
      // d(source)/du_b = (gamma'(u) . grad u + g'(u)) phi_b + gamma(u) . grad phi_b
      Vec2 dflux_dval = Vec2::Zero();
      double dsrc_dval = 0.0;
      Mat2 alpha = Mat2::Zero();
      Vec2 gamma = Vec2::Zero();
      if (spec.alpha) {
        alpha = spec.alpha(uv);
        dflux_dval += spec.d_alpha(uv) * du;
      }
      if (spec.beta) dflux_dval += spec.d_beta(uv);
      if (spec.gamma) {
        gamma = spec.gamma(uv);
        dsrc_dval += spec.d_gamma(uv).dot(du);
      }
      if (spec.g) dsrc_dval += spec.d_g(uv);

      for (std::size_t b = 0; b < 3; ++b) {
        const Vec2 dflux = dflux_dval * lam[b] + alpha * gr[b];
        const double dsrc = dsrc_dval * lam[b] + gamma.dot(gr[b]);
        for (std::size_t a = 0; a < 3; ++a) {
          local(static_cast<int>(a), static_cast<int>(b)) += wq * (dflux.dot(gr[a]) + dsrc * lam[a]);
        }
      }
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) val[space.slot(t, a, b)] += local(a, b);
    }
  }
  return m;
}

Vector assemble_weighted_lower_order(const FeSpace& space, const QuadTransfer& transfer,
                                     std::span<const Vector* const> states, std::span<const double> weights,
                                     const ProblemSpec& spec) {
  if (states.size() != weights.size()) {
    throw AssemblyError("assemble_weighted_lower_order: state/weight count mismatch");
  }
  if (transfer.size() != static_cast<std::size_t>(space.num_quad_points())) {
    throw AssemblyError("assemble_weighted_lower_order: transfer built for a different space");
  }
  const FeSpace& src = transfer.source();
  for (const Vector* s : states) {
    if (s->size() != src.size()) throw AssemblyError("assemble_weighted_lower_order: state dimension mismatch");
  }
  Vector out = Vector::Zero(space.size());
  if (!spec.beta && !spec.gamma && !spec.g) return out;

  const Mesh& mesh = space.mesh();
  const Mesh& smesh = src.mesh();
  const auto& rule = space.rule();
  const int nq = rule.size();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& gr = space.basis_gradients(t);
    const double area = space.area(t);
    std::array<double, 3> local{};
    for (int q = 0; q < nq; ++q) {
      const auto k = static_cast<std::size_t>(t * nq + q);
      const PointLocation& loc = transfer.location(k);
      const auto& stri = smesh.triangle(loc.triangle);
      const auto& sgr = src.basis_gradients(loc.triangle);
      Vec2 flux = Vec2::Zero();
      double source = 0.0;
      for (std::size_t i = 0; i < states.size(); ++i) {
        const Vector& s = *states[i];
        const double w0 = s[stri[0]];
        const double w1 = s[stri[1]];
        const double w2 = s[stri[2]];
        const double wv = loc.barycentric[0] * w0 + loc.barycentric[1] * w1 + loc.barycentric[2] * w2;
        Vec2 f = Vec2::Zero();
        double src_i = 0.0;
        if (spec.beta) f = spec.beta(wv);
        if (spec.gamma) src_i += spec.gamma(wv).dot(w0 * sgr[0] + w1 * sgr[1] + w2 * sgr[2]);
        if (spec.g) src_i += spec.g(wv);
        flux += weights[i] * f;
        source += weights[i] * src_i;
      }
      const double wq = rule.weights[static_cast<std::size_t>(q)] * area;
      const auto& lam = rule.points[static_cast<std::size_t>(q)];
      for (std::size_t a = 0; a < 3; ++a) local[a] += wq * (flux.dot(gr[a]) + source * lam[a]);
    }
    scatter(mesh, t, local, out);
  }
  return out;
}

Vector assemble_load(const FeSpace& space, const std::function<double(const Vec2&)>& f) {
  const Mesh& mesh = space.mesh();
  const auto& rule = space.rule();
  Vector out = Vector::Zero(space.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    std::array<double, 3> local{};
    for (int q = 0; q < rule.size(); ++q) {
      const double wq = rule.weights[static_cast<std::size_t>(q)] * space.area(t) * f(space.quad_point(t, q));
      const auto& lam = rule.points[static_cast<std::size_t>(q)];
      for (std::size_t a = 0; a < 3; ++a) local[a] += wq * lam[a];
    }
    scatter(mesh, t, local, out);
  }
  return out;
}

void apply_dirichlet(SparseMatrix& matrix, const std::vector<char>& mask) {
  if (mask.size() != static_cast<std::size_t>(matrix.rows())) {
    throw AssemblyError("apply_dirichlet: mask length does not match matrix dimension");
  }
  for (int row = 0; row < matrix.outerSize(); ++row) {
    const bool brow = mask[static_cast<std::size_t>(row)] != 0;
    for (SparseMatrix::InnerIterator it(matrix, row); it; ++it) {
      const bool bcol = mask[static_cast<std::size_t>(it.col())] != 0;
      if (brow || bcol) it.valueRef() = (brow && it.col() == row) ? 1.0 : 0.0;
    }
  }
}

void zero_boundary_entries(Vector& v, const std::vector<char>& mask) {
  if (mask.size() != static_cast<std::size_t>(v.size())) {
    throw AssemblyError("zero_boundary_entries: mask length does not match vector length");
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)] != 0) v[i] = 0.0;
  }
}

void apply_dirichlet(SparseMatrix& matrix, Vector& rhs, const std::vector<char>& mask) {
  // Boundary values are zero, so moving the boundary columns to the rhs
  // contributes nothing.
  apply_dirichlet(matrix, mask);
  zero_boundary_entries(rhs, mask);
}

}  // namespace pide
