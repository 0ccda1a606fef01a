#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "pide/assembly.hpp"
#include "pide/verification.hpp"

#include <Eigen/Eigenvalues>
#include <random>

using namespace pide;

namespace {

Vector random_vector(int n, unsigned seed, double scale = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

double max_abs(const Eigen::MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("quadrature rules integrate polynomials exactly") {
  const QuadratureRule& r = triangle_rule_degree4();
  double sum = 0.0;
  for (double w : r.weights) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  // Mean of l1^a l2^b over the reference triangle is 2 a! b! / (a + b + 2)!.
  auto mean = [&](int a, int b) {
    double s = 0.0;
    for (int q = 0; q < r.size(); ++q) s += r.weights[q] * std::pow(r.points[q][1], a) * std::pow(r.points[q][2], b);
    return s;
  };
  CHECK(mean(4, 0) == doctest::Approx(2.0 * 24.0 / 720.0).epsilon(1e-14));
  CHECK(mean(2, 2) == doctest::Approx(2.0 * 4.0 / 720.0).epsilon(1e-14));
  CHECK(mean(1, 3) == doctest::Approx(2.0 * 6.0 / 720.0).epsilon(1e-14));

  const GaussLegendre gl = gauss_legendre(5);
  CHECK(integrate_gl([](double x) { return std::pow(x, 9); }, 0.0, 2.0, gl) ==
        doctest::Approx(102.4).epsilon(1e-13));
  CHECK(integrate_gl([](double x) { return std::exp(x); }, 0.0, 3.0, gauss_legendre(12), 3) ==
        doctest::Approx(std::exp(3.0) - 1.0).epsilon(1e-14));
}

TEST_CASE("mass and stiffness match dense oracles") {
  for (int n = 1; n <= 4; ++n) {
    auto mesh = build_mesh(n, n + 1, Rectangle{0.0, 1.5, -0.5, 0.5});
    auto space = make_space(mesh);
    const Eigen::MatrixXd m = oracle::dense(assemble_mass(*space));
    CHECK(max_abs(m - oracle::mass(*mesh, oracle::collapsed_rule(4))) < 1e-12);

    Mat2 d;
    d << 2.0, 0.5, 0.5, 1.0;
    const Eigen::MatrixXd k = oracle::dense(assemble_stiffness(*space, [&](const Vec2&, double) { return d; }, 0.0));
    CHECK(max_abs(k - oracle::stiffness(*mesh, d)) < 1e-12);
    // Constants lie in the kernel of the stiffness matrix.
    CHECK(max_abs(k * Eigen::VectorXd::Ones(mesh->num_nodes())) < 1e-12);
  }
}

TEST_CASE("non-symmetric diffusion is rejected") {
  auto space = make_space(build_mesh(2, 2));
  Mat2 d;
  d << 1.0, 0.3, 0.0, 1.0;
  CHECK_THROWS_AS(assemble_stiffness(*space, [&](const Vec2&, double) { return d; }, 0.0), AssemblyError);
}

TEST_CASE("eliminated mass + stiffness system is SPD") {
  auto mesh = build_mesh(4, 3);
  auto space = make_space(mesh);
  SparseMatrix a = assemble_stiffness(*space, identity_diffusion(), 0.0);
  const SparseMatrix m = assemble_mass(*space);
  a += 8.0 * m;
  apply_dirichlet(a, mesh->boundary_mask());
  const Eigen::MatrixXd dm = oracle::dense(a);
  CHECK(max_abs(dm - dm.transpose()) < 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dm);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("B vector matches oracles") {
  SUBCASE("polynomial coefficients, exact integration") {
    const ProblemSpec s = oracle::polynomial_spec();
    for (int n = 1; n <= 4; ++n) {
      auto mesh = build_mesh(n, n);
      auto space = make_space(mesh);
      const Vector u = random_vector(mesh->num_nodes(), 11u + n);
      const QuadField uq = quad_field(*space, FeFunction(mesh, u));
      const Vector b = assemble_B_vector(*space, uq, uq, s, FormVariant::full_B);
      CHECK((b - oracle::b_vector(*mesh, u, s, oracle::collapsed_rule(4))).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }
  SUBCASE("sine coefficients, same rule") {
    const ProblemSpec s = sine_memory_problem().spec;
    for (int n = 1; n <= 4; ++n) {
      auto mesh = build_mesh(n, n);
      auto space = make_space(mesh);
      const Vector u = random_vector(mesh->num_nodes(), 3u + n, 2.0);
      const QuadField uq = quad_field(*space, FeFunction(mesh, u));
      const Vector b = assemble_B_vector(*space, uq, uq, s, FormVariant::full_B);
      CHECK((b - oracle::b_vector(*mesh, u, s, oracle::six_point_rule())).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }
}

TEST_CASE("form variants split B consistently") {
  const ProblemSpec s = oracle::polynomial_spec();
  auto mesh = build_mesh(3, 3);
  auto space = make_space(mesh);
  const Vector w = random_vector(mesh->num_nodes(), 5);
  const Vector u = random_vector(mesh->num_nodes(), 6);
  const QuadField wq = quad_field(*space, FeFunction(mesh, w));
  const QuadField uq = quad_field(*space, FeFunction(mesh, u));
  const QuadField zq = zero_quad_field(*space);

  // B(w) = B~(w; w)
  const Vector full = assemble_B_vector(*space, wq, wq, s, FormVariant::full_B);
  CHECK((full - assemble_B_vector(*space, wq, wq, s, FormVariant::linearized_Btilde)).norm() < 1e-13);

  // B~(w; u) = Bs(w; u) + N(w; u) and the matrix form reproduces the u-dependent part.
  const Vector bt = assemble_B_vector(*space, wq, uq, s, FormVariant::linearized_Btilde);
  const Vector bs = assemble_B_vector(*space, wq, uq, s, FormVariant::symmetric_Bs);
  const Vector nn = assemble_B_vector(*space, wq, uq, s, FormVariant::lower_order_N);
  CHECK((bt - bs - nn).norm() < 1e-13);
  const Vector n0 = assemble_B_vector(*space, wq, zq, s, FormVariant::lower_order_N);
  const SparseMatrix c = assemble_Btilde_matrix(*space, wq, s, FormVariant::linearized_Btilde);
  CHECK((c * u + n0 - bt).norm() < 1e-13);
  const SparseMatrix cs = assemble_Btilde_matrix(*space, wq, s, FormVariant::symmetric_Bs);
  CHECK((cs * u - bs).norm() < 1e-13);
  const Eigen::MatrixXd dcs = oracle::dense(cs);
  CHECK(max_abs(dcs - dcs.transpose()) < 1e-14);
}

TEST_CASE("Jacobian matches central finite differences") {
  for (const ProblemSpec& s : {oracle::polynomial_spec(), sine_memory_problem().spec, linear_memory_problem().spec}) {
    auto mesh = build_mesh(3, 3);
    auto space = make_space(mesh);
    const Vector u = random_vector(mesh->num_nodes(), 21, 1.5);
    const Eigen::MatrixXd j = oracle::dense(assemble_B_jacobian(*space, quad_field(*space, FeFunction(mesh, u)), s));
    Eigen::MatrixXd fd(j.rows(), j.cols());
    const double eps = 1e-6;
    for (int k = 0; k < mesh->num_nodes(); ++k) {
      Vector up = u, um = u;
      up[k] += eps;
      um[k] -= eps;
      const QuadField qp = quad_field(*space, FeFunction(mesh, up));
      const QuadField qm = quad_field(*space, FeFunction(mesh, um));
      fd.col(k) = (assemble_B_vector(*space, qp, qp, s, FormVariant::full_B) -
                   assemble_B_vector(*space, qm, qm, s, FormVariant::full_B)) /
                  (2.0 * eps);
    }
    CHECK(max_abs(j - fd) / max_abs(j) < 1e-6);
  }
}

TEST_CASE("load vector integrates polynomials exactly") {
  auto mesh = build_mesh(4, 4);
  auto space = make_space(mesh);
  const Vector f = assemble_load(*space, [](const Vec2& x) { return x.x() * x.x() * x.y(); });
  // sum_j (f, phi_j) = (f, 1) = 1/6
  CHECK(f.sum() == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("transfer between non-nested meshes") {
  auto coarse = make_space(build_mesh(3, 3));
  auto fine = make_space(build_mesh(8, 8));
  const QuadTransfer tr(*fine, coarse);
  CHECK(static_cast<int>(tr.size()) == fine->num_quad_points());
  auto f = [](const Vec2& x) { return 1.0 + 2.0 * x.x() - x.y(); };
  const QuadField q = tr.apply(interpolate(coarse->mesh_ptr(), f));
  for (int t = 0; t < fine->mesh().num_triangles(); ++t) {
    for (int k = 0; k < fine->rule().size(); ++k) {
      const std::size_t i = static_cast<std::size_t>(t * fine->rule().size() + k);
      CHECK(q.value[i] == doctest::Approx(f(fine->quad_point(t, k))).epsilon(1e-13));
      CHECK((q.grad[i] - Vec2(2.0, -1.0)).norm() < 1e-12);
    }
  }
}

TEST_CASE("weighted lower-order memory equals the sum of single assemblies") {
  const ProblemSpec s = sine_memory_problem().spec;
  auto coarse = make_space(build_mesh(3, 3));
  auto fine = make_space(build_mesh(5, 5));
  const QuadTransfer tr(*fine, coarse);
  std::vector<Vector> states = {random_vector(coarse->size(), 1), random_vector(coarse->size(), 2),
                                random_vector(coarse->size(), 3)};
  std::vector<const Vector*> ptrs = {&states[0], &states[1], &states[2]};
  const std::vector<double> w = {0.5, -1.25, 2.0};
  const Vector fused = assemble_weighted_lower_order(*fine, tr, ptrs, w, s);
  Vector ref = Vector::Zero(fine->size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const QuadField q = tr.apply(FeFunction(coarse->mesh_ptr(), states[i]));
    ref += w[i] * assemble_B_vector(*fine, q, q, s, FormVariant::lower_order_N);
  }
  CHECK((fused - ref).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("Dirichlet elimination keeps the pattern and zeroes boundary rhs") {
  auto mesh = build_mesh(3, 3);
  auto space = make_space(mesh);
  SparseMatrix a = assemble_mass(*space);
  const auto nnz = a.nonZeros();
  Vector rhs = Vector::Ones(mesh->num_nodes());
  apply_dirichlet(a, rhs, mesh->boundary_mask());
  CHECK(a.nonZeros() == nnz);
  const Eigen::MatrixXd d = oracle::dense(a);
  for (int i = 0; i < mesh->num_nodes(); ++i) {
    if (!mesh->is_boundary(i)) continue;
    CHECK(rhs[i] == 0.0);
    CHECK(d(i, i) == 1.0);
    CHECK(d.row(i).cwiseAbs().sum() == 1.0);
    CHECK(d.col(i).cwiseAbs().sum() == 1.0);
  }
}
