// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "robinlab/assembly.hpp"
#include "robinlab/eigensolve.hpp"
#include "robinlab/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace robinlab;

namespace {

TriangleMesh reference_triangle() {
  TriangleMesh m;
  m.nodes = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  m.triangles = {{0, 1, 2}};
  m.boundary_edges = {{0, 1, 0}, {1, 2, 1}, {2, 0, 2}};
  m.on_boundary = {true, true, true};
  m.h = std::sqrt(2.0);
  return m;
}

Eigen::VectorXd nodal(const TriangleMesh& mesh, double (*f)(const Eigen::Vector2d&)) {
  Eigen::VectorXd u(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) u[i] = f(mesh.nodes[i]);
  return u;
}

}  // namespace

TEST_CASE("reference element matrices") {
  const TriangleMesh m = reference_triangle();
  const Eigen::MatrixXd k = Eigen::MatrixXd(assemble_stiffness(m).matrix);
  const Eigen::MatrixXd mm = Eigen::MatrixXd(assemble_mass(m).matrix);

  Eigen::Matrix3d k_ref;
  k_ref << 1.0, -0.5, -0.5,
          -0.5,  0.5,  0.0,
          -0.5,  0.0,  0.5;
  const double a = 0.5;
  Eigen::Matrix3d m_ref;
  m_ref << 2, 1, 1,
           1, 2, 1,
           1, 1, 2;
  m_ref *= a / 12.0;

  CHECK((k - k_ref).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((mm - m_ref).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("assembled forms reproduce exact integrals of linears") {
  const TriangleMesh mesh = mesh_at_level(make_domain("unit_square"), 2);
  const DiscreteForm k = assemble_stiffness(mesh);
  const DiscreteForm m = assemble_mass(mesh);

  CHECK(k.kind == FormKind::stiffness);
  CHECK(m.kind == FormKind::mass);
  CHECK(k.symmetry_defect() <= 1e-15);
  CHECK(m.symmetry_defect() <= 1e-15);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.num_nodes());
  const Eigen::VectorXd x = nodal(mesh, +[](const Eigen::Vector2d& p) { return p.x(); });

  // Constants are in the stiffness kernel; u = x has unit gradient.
  CHECK(std::abs(k.quadratic(ones)) <= 1e-13);
  CHECK(k.quadratic(x) == doctest::Approx(1.0).epsilon(1e-13));
  // Mass integrates products of linears exactly: 1 and x^2 over the square.
  CHECK(m.quadratic(ones) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(m.quadratic(x) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("level zero square reduces to the classic one-node problem") {
  const TriangleMesh mesh = mesh_at_level(make_domain("unit_square"), 0);
  const DiscreteForm k = assemble_stiffness(mesh);
  const DiscreteForm m = assemble_mass(mesh);
  const DirichletReduction red = reduce_dirichlet(k, m, mesh);

  REQUIRE(red.interior.size() == 1);
  CHECK_FALSE(mesh.on_boundary[red.interior[0]]);
  CHECK(red.stiffness.matrix.coeff(0, 0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(red.mass.matrix.coeff(0, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));

  const Spectrum s = solve(red.stiffness, red.mass, 1);
  CHECK(s.eigenvalues[0] == doctest::Approx(24.0).epsilon(1e-12));
}

TEST_CASE("dirichlet reduction keeps interior indices ascending") {
  const TriangleMesh mesh = mesh_at_level(make_domain("unit_square"), 1);
  const DirichletReduction red =
      reduce_dirichlet(assemble_stiffness(mesh), assemble_mass(mesh), mesh);
  CHECK(red.interior.size() == 5);
  for (size_t i = 1; i < red.interior.size(); ++i) {
    CHECK(red.interior[i] > red.interior[i - 1]);
  }
  for (int i : red.interior) CHECK_FALSE(mesh.on_boundary[i]);
  CHECK(red.stiffness.dim() == 5);
  CHECK(red.mass.dim() == 5);

  // The coarse lshape has no interior node at all.
  const TriangleMesh ell = coarse_mesh(make_domain("lshape"));
  CHECK_THROWS_AS(reduce_dirichlet(assemble_stiffness(ell), assemble_mass(ell), ell),
                  std::invalid_argument);
}

TEST_CASE("boundary forms integrate side weights exactly") {
  const PolygonalDomain d = make_domain("unit_square");
  for (int level : {1, 2}) {
    const TriangleMesh mesh = mesh_at_level(d, level);
    const BoundaryTraversal tr = boundary_traversal(mesh);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.num_nodes());

    const DiscreteForm t1 = assemble_boundary_weighted(mesh, tr, std::vector<double>{1, 1, 1, 1});
    CHECK(t1.kind == FormKind::boundary);
    CHECK(t1.symmetry_defect() <= 1e-15);
    CHECK(t1.quadratic(ones) == doctest::Approx(4.0).epsilon(1e-13));

    // Per-side weights pick out side lengths, at every refinement level.
    const DiscreteForm tw =
        assemble_boundary_weighted(mesh, tr, std::vector<double>{2, 3, 5, 7});
    CHECK(tw.quadratic(ones) == doctest::Approx(17.0).epsilon(1e-13));

    // A callable weight sampled at the same quadrature nodes matches the
    // per-side constant version entry for entry.
    const DiscreteForm tc = assemble_boundary_weighted(
        mesh, tr, [](double) { return 1.0; });
    CHECK((Eigen::MatrixXd(tc.matrix) - Eigen::MatrixXd(t1.matrix)).cwiseAbs().maxCoeff() <=
          1e-15);

    // theta(s) = s integrates to P^2/2 against u = v = 1.
    const DiscreteForm ts = assemble_boundary_weighted(mesh, tr, [](double s) { return s; });
    CHECK(ts.quadratic(ones) == doctest::Approx(8.0).epsilon(1e-12));
  }
}

TEST_CASE("nonlocal kernel form") {
  const TriangleMesh mesh = mesh_at_level(make_domain("unit_square"), 2);
  const BoundaryTraversal tr = boundary_traversal(mesh);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.num_nodes());

  // Constant kernel gives the rank-one form (int u)(int v).
  const DiscreteForm b1 = assemble_nonlocal(mesh, tr, [](double, double) { return 1.0; });
  CHECK(b1.kind == FormKind::nonlocal);
  CHECK(b1.symmetry_defect() <= 1e-14);
  CHECK(b1.quadratic(ones) == doctest::Approx(16.0).epsilon(1e-12));

  // An oscillating difference kernel annihilates constants over the loop.
  const double p = tr.total_arclength;
  const DiscreteForm bc = assemble_nonlocal(
      mesh, tr, [p](double s, double t) { return std::cos(2.0 * M_PI * (s - t) / p); });
  CHECK(std::abs(bc.quadratic(ones)) <= 1e-6);

  // Asymmetric input is symmetrized, never trusted.
  const DiscreteForm ba = assemble_nonlocal(mesh, tr, [](double s, double) { return s; });
  CHECK(ba.symmetry_defect() <= 1e-14);
}

TEST_CASE("natural condition defect of discrete eigenpairs") {
  const PolygonalDomain d = make_domain("unit_square");
  const auto zero_theta = [](const TriangleMesh& m, const BoundaryTraversal&) {
    DiscreteForm f;
    f.matrix.resize(m.num_nodes(), m.num_nodes());
    f.kind = FormKind::boundary;
    return f;
  };

  const TriangleMesh m2 = mesh_at_level(d, 2);
  const BoundaryTraversal t2 = boundary_traversal(m2);
  const DiscreteForm k2 = assemble_stiffness(m2);
  const DiscreteForm mm2 = assemble_mass(m2);

  // The free constant mode has no boundary flux at all.
  const Spectrum s2 = solve(k2, mm2, 4);
  const double r0 = neumann_trace_residual(m2, t2, s2.vectors.col(0), s2.eigenvalues[0], zero_theta);
  CHECK(r0 <= 1e-10);

  // The first nonconstant Neumann mode has an O(h) defect that shrinks under
  // refinement.
  const double r2 = neumann_trace_residual(m2, t2, s2.vectors.col(1), s2.eigenvalues[1], zero_theta);

  const TriangleMesh m3 = mesh_at_level(d, 3);
  const BoundaryTraversal t3 = boundary_traversal(m3);
  const Spectrum s3 = solve(assemble_stiffness(m3), assemble_mass(m3), 4);
  const double r3 = neumann_trace_residual(m3, t3, s3.vectors.col(1), s3.eigenvalues[1], zero_theta);

  CHECK(r2 > 0.0);
  CHECK(r3 < r2);

  // Same story for a Robin operator.
  const auto robin_theta = [](const TriangleMesh& m, const BoundaryTraversal& tr) {
    return assemble_boundary_weighted(m, tr, std::vector<double>(4, -1.0));
  };
  DiscreteForm rk2 = k2;
  rk2.matrix = (k2.matrix + robin_theta(m2, t2).matrix).eval();
  const Spectrum rs2 = solve(rk2, mm2, 2);
  DiscreteForm rk3 = assemble_stiffness(m3);
  rk3.matrix = (rk3.matrix + robin_theta(m3, t3).matrix).eval();
  const Spectrum rs3 = solve(rk3, assemble_mass(m3), 2);
  const double rr2 = neumann_trace_residual(m2, t2, rs2.vectors.col(0), rs2.eigenvalues[0], robin_theta);
  const double rr3 = neumann_trace_residual(m3, t3, rs3.vectors.col(0), rs3.eigenvalues[0], robin_theta);
  CHECK(rr3 < rr2);

  // Feeding a vector that is not an eigenpair is an error, not a number.
  Eigen::VectorXd junk = Eigen::VectorXd::LinSpaced(m2.num_nodes(), 0.3, 1.7);
  CHECK_THROWS_AS(neumann_trace_residual(m2, t2, junk, 1.0, zero_theta),
                  std::invalid_argument);
}
