// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "robinlab/assembly.hpp"
#include "robinlab/eigensolve.hpp"
#include "robinlab/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <vector>

using namespace robinlab;

namespace {

// 1d Dirichlet Laplacian on (0,1), piecewise linear on a uniform grid. The
// discrete eigenvalues have the closed form
// lambda_k = (6/h^2) (1 - cos(k pi h)) / (2 + cos(k pi h)).
struct Line1d {
  DiscreteForm k;
  DiscreteForm m;
  int n = 0;
  double h = 0.0;
};

Line1d line_problem(int n) {
  Line1d p;
  p.n = n;
  p.h = 1.0 / (n + 1);
  std::vector<Eigen::Triplet<double>> tk, tm;
  for (int i = 0; i < n; ++i) {
    tk.emplace_back(i, i, 2.0 / p.h);
    tm.emplace_back(i, i, 4.0 * p.h / 6.0);
    if (i + 1 < n) {
      tk.emplace_back(i, i + 1, -1.0 / p.h);
      tk.emplace_back(i + 1, i, -1.0 / p.h);
      tm.emplace_back(i, i + 1, p.h / 6.0);
      tm.emplace_back(i + 1, i, p.h / 6.0);
    }
  }
  p.k.matrix.resize(n, n);
  p.k.matrix.setFromTriplets(tk.begin(), tk.end());
  p.m.matrix.resize(n, n);
  p.m.matrix.setFromTriplets(tm.begin(), tm.end());
  return p;
}

double line_eigenvalue(int k, double h) {
  return 6.0 / (h * h) * (1.0 - std::cos(k * M_PI * h)) / (2.0 + std::cos(k * M_PI * h));
}

Spectrum synthetic(std::vector<double> values, int total_dim) {
  Spectrum s;
  s.eigenvalues = std::move(values);
  s.total_dim = total_dim;
  return s;
}

}  // namespace

TEST_CASE("dense path reproduces the 1d closed form") {
  const Line1d p = line_problem(99);
  SolveOptions opt;
  opt.dense_threshold = 200;
  const Spectrum s = solve(p.k, p.m, 10, opt);

  CHECK_FALSE(s.used_krylov);
  CHECK(s.total_dim == 99);
  for (int k = 1; k <= 10; ++k) {
    CHECK(s.eigenvalues[k - 1] ==
          doctest::Approx(line_eigenvalue(k, p.h)).epsilon(1e-12));
  }

  // Vectors come back M-orthonormal.
  const Eigen::MatrixXd gram = s.vectors.transpose() * p.m.matrix * s.vectors;
  CHECK((gram - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("krylov path agrees with the dense path") {
  const Line1d p = line_problem(99);
  SolveOptions krylov;
  krylov.dense_threshold = 10;  // force the iterative branch
  const Spectrum si = solve(p.k, p.m, 8, krylov);
  CHECK(si.used_krylov);
  for (int k = 1; k <= 8; ++k) {
    CHECK(si.eigenvalues[k - 1] ==
          doctest::Approx(line_eigenvalue(k, p.h)).epsilon(1e-10));
  }
  const Eigen::MatrixXd gram = si.vectors.transpose() * p.m.matrix * si.vectors;
  CHECK((gram - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-10);

  SolveOptions novec = krylov;
  novec.want_vectors = false;
  const Spectrum sv = solve(p.k, p.m, 8, novec);
  CHECK(sv.vectors.size() == 0);
  for (int k = 0; k < 8; ++k) {
    CHECK(sv.eigenvalues[k] == doctest::Approx(si.eigenvalues[k]).epsilon(1e-10));
  }
}

TEST_CASE("solve validates its inputs") {
  const Line1d p = line_problem(12);
  CHECK_THROWS_AS(solve(p.k, p.m, 0), std::invalid_argument);
  CHECK_THROWS_AS(solve(p.k, p.m, 13), std::invalid_argument);

  DiscreteForm singular;
  singular.matrix.resize(12, 12);  // the zero matrix is no mass matrix
  CHECK_THROWS(solve(p.k, singular, 2));

  const Line1d q = line_problem(5);
  CHECK_THROWS_AS(solve(p.k, q.m, 2), std::invalid_argument);
}

TEST_CASE("counting function over a computed window") {
  const Spectrum s = synthetic({1.0, 2.0, 2.0, 3.0}, 10);
  CHECK(counting_function(s, 0.5) == 0);
  CHECK(counting_function(s, 1.0) == 1);
  CHECK(counting_function(s, 2.0) == 3);
  CHECK(counting_function(s, 2.5) == 3);
  CHECK(counting_function(s, 3.0) == 4);
  // Beyond the window the count is unknown unless the window is everything.
  CHECK_THROWS_AS(counting_function(s, 3.5), std::domain_error);
  const Spectrum full = synthetic({1.0, 2.0, 2.0, 3.0}, 4);
  CHECK(counting_function(full, 100.0) == 4);
  CHECK_THROWS_AS(counting_function(synthetic({}, 0), 1.0), std::invalid_argument);
}

TEST_CASE("cluster merging") {
  const Spectrum s = synthetic({1.0, 1.0 + 5e-9, 2.0, 3.0, 3.0, 3.0}, 6);
  const auto cl = s.clusters(1e-8);
  REQUIRE(cl.size() == 3);
  CHECK(cl[0].multiplicity == 2);
  CHECK(cl[0].first_index == 0);
  CHECK(cl[0].value == doctest::Approx(1.0 + 2.5e-9).epsilon(1e-15));
  CHECK(cl[1].multiplicity == 1);
  CHECK(cl[2].multiplicity == 3);
  CHECK(cl[2].first_index == 3);

  // Near zero the absolute cushion keeps numerical twins together.
  const auto tiny = synthetic({-1e-13, 1e-13}, 2).clusters(1e-8);
  CHECK(tiny.size() == 1);

  // Distinct values never merge.
  CHECK(synthetic({1.0, 1.1}, 2).clusters(1e-8).size() == 2);
}

TEST_CASE("inertia counts strictly below the shift") {
  Line1d diag;
  diag.k.matrix.resize(3, 3);
  diag.m.matrix.resize(3, 3);
  std::vector<Eigen::Triplet<double>> tk, tm;
  for (int i = 0; i < 3; ++i) {
    tk.emplace_back(i, i, static_cast<double>(i + 1));
    tm.emplace_back(i, i, 1.0);
  }
  diag.k.matrix.setFromTriplets(tk.begin(), tk.end());
  diag.m.matrix.setFromTriplets(tm.begin(), tm.end());

  for (int threshold : {0, 100}) {  // sparse and dense factorizations
    const InertiaResult mid = inertia_count(diag.k, diag.m, 2.5, threshold);
    CHECK(mid.below == 2);
    CHECK_FALSE(mid.perturbed);
    CHECK(mid.lambda_used == 2.5);

    // Grazing an eigenvalue nudges the shift upward and flags the result.
    const InertiaResult graze = inertia_count(diag.k, diag.m, 2.0, threshold);
    CHECK(graze.perturbed);
    CHECK(graze.lambda_used > 2.0);
    CHECK(graze.below == 2);
  }

  const Line1d q = line_problem(5);
  CHECK_THROWS_AS(inertia_count(diag.k, q.m, 1.0, 100), std::invalid_argument);
}

TEST_CASE("inertia agrees with the counting function on a real pencil") {
  const TriangleMesh mesh = mesh_at_level(make_domain("unit_square"), 2);
  const DirichletReduction red =
      reduce_dirichlet(assemble_stiffness(mesh), assemble_mass(mesh), mesh);
  const int n = red.stiffness.dim();
  const Spectrum all = solve(red.stiffness, red.mass, n);
  for (double lambda : {25.0, 60.0, 120.0, 400.0, 2000.0}) {
    const InertiaResult ic = inertia_count(red.stiffness, red.mass, lambda);
    CHECK(ic.below == counting_function(all, lambda));
  }
}

TEST_CASE("richardson extrapolation at second order") {
  // lambda(h) = 10 + 3 h^2 under halving: exactly order two.
  const Spectrum coarse = synthetic({13.0}, 100);
  const Spectrum mid = synthetic({10.75}, 100);
  const Spectrum fine = synthetic({10.1875}, 100);

  const ExtrapolatedSpectrum two = richardson(mid, fine);
  REQUIRE(two.values.size() == 1);
  CHECK(two.values[0].value == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(two.values[0].error == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(std::isnan(two.values[0].order));
  CHECK(two.values[0].extrapolated);

  const ExtrapolatedSpectrum three = richardson(coarse, mid, fine);
  CHECK(three.values[0].value == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(three.values[0].order == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(three.values[0].extrapolated);
}

TEST_CASE("richardson refuses below-order data") {
  // lambda(h) = 10 + h is first order; extrapolating it would lie.
  const ExtrapolatedSpectrum r =
      richardson(synthetic({12.0}, 100), synthetic({11.0}, 100), synthetic({10.5}, 100));
  CHECK_FALSE(r.values[0].extrapolated);
  CHECK(r.values[0].value == 10.5);
  CHECK(r.values[0].error == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.values[0].order == doctest::Approx(1.0).epsilon(1e-12));

  // A converged sequence short-circuits with an infinite observed order.
  const ExtrapolatedSpectrum c =
      richardson(synthetic({7.0}, 9), synthetic({7.0}, 9), synthetic({7.0}, 9));
  CHECK(c.values[0].value == 7.0);
  CHECK(c.values[0].error == 0.0);
  CHECK(std::isinf(c.values[0].order));

  CHECK_THROWS_AS(richardson(synthetic({1.0, 2.0}, 9), synthetic({1.0}, 9)),
                  std::invalid_argument);
}

TEST_CASE("spectrum csv lists merged clusters") {
  const Spectrum s = synthetic({2.0, 2.0 + 1e-9, 5.0}, 8);
  const std::vector<double> errors = {1e-3, 2e-3, 5e-4};
  std::stringstream out;
  write_spectrum_csv(out, s, &errors);

  std::string line;
  std::getline(out, line);
  CHECK(line == "index,eigenvalue,multiplicity,error_estimate");

  std::getline(out, line);
  int index = 0, mult = 0;
  double value = 0.0, err = 0.0;
  REQUIRE(std::sscanf(line.c_str(), "%d,%lg,%d,%lg", &index, &value, &mult, &err) == 4);
  CHECK(index == 1);
  CHECK(mult == 2);
  CHECK(value == doctest::Approx(2.0 + 0.5e-9).epsilon(1e-15));
  CHECK(err == 2e-3);  // the worst member bar represents the cluster

  std::getline(out, line);
  REQUIRE(std::sscanf(line.c_str(), "%d,%lg,%d,%lg", &index, &value, &mult, &err) == 4);
  CHECK(index == 3);
  CHECK(value == 5.0);
  CHECK(mult == 1);
  CHECK(err == 5e-4);

  std::vector<double> wrong = {1e-3};
  CHECK_THROWS_AS(write_spectrum_csv(out, s, &wrong), std::invalid_argument);
}
