// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "robinlab/harness.hpp"

#include <json.hpp>

#include <cmath>
#include <random>

using namespace robinlab;

namespace {

HarnessOptions coarse_opts() {
  HarnessOptions o;
  o.levels = {2, 3};  // small meshes keep the unit suite fast
  return o;
}

ValueWithError ve(double v, double e) { return {v, e}; }

}  // namespace

TEST_CASE("counting verdict separates bars before certifying") {
  // Three boundary-operator values land strictly below a simple threshold.
  const CountingReport strict = counting_verdict(
      {ve(1, 0.1), ve(2, 0.1), ve(3, 0.1)}, {ve(10, 0.1), ve(20, 0.1)}, 1);
  CHECK(strict.verdict == Verdict::holds_strict);
  CHECK(strict.robin_strictly_below == 3);
  CHECK(strict.robin_ambiguous == 0);
  CHECK(strict.dirichlet_upto == 1);
  CHECK(strict.j == 1);
  CHECK(strict.dirichlet_j.value == 10.0);

  // A bar straddling the threshold can only be ambiguous.
  const CountingReport amb = counting_verdict(
      {ve(1, 0.1), ve(9.95, 0.2)}, {ve(10, 0.1), ve(20, 0.1)}, 1);
  CHECK(amb.verdict == Verdict::inconclusive);
  CHECK(amb.robin_strictly_below == 1);
  CHECK(amb.robin_ambiguous == 1);

  // Everything above the threshold with separated bars refutes the count.
  const CountingReport bad = counting_verdict(
      {ve(11, 0.1), ve(12, 0.1)}, {ve(10, 0.1), ve(20, 0.1)}, 1);
  CHECK(bad.verdict == Verdict::violated);
  CHECK(bad.robin_strictly_below == 0);
  CHECK(bad.robin_ambiguous == 0);

  // Degenerate thresholds count their whole cluster.
  const CountingReport tie = counting_verdict(
      {ve(1, 0.01), ve(2, 0.01), ve(3, 0.01), ve(4, 0.01)},
      {ve(10, 0.0), ve(10, 0.0), ve(20, 0.0)}, 1);
  CHECK(tie.dirichlet_upto == 2);
  CHECK(tie.verdict == Verdict::holds_strict);  // 4 certified >= 2 + 1

  CHECK_THROWS_AS(counting_verdict({ve(1, 0)}, {ve(10, 0)}, 2), std::invalid_argument);
  CHECK_THROWS_AS(counting_verdict({ve(1, 0)}, {ve(10, 0)}, 0), std::invalid_argument);
}

TEST_CASE("plane wave direction selection") {
  std::mt19937_64 rng(7);
  int resamples = -1;

  // An accepted preferred direction is only rescaled.
  const Eigen::Vector2d preferred(3.0, 4.0);
  const Eigen::Vector2d got = select_plane_wave_direction(
      10.0, &preferred, [](const Eigen::Vector2d&) { return true; }, rng, &resamples);
  CHECK(got.isApprox(Eigen::Vector2d(6.0, 8.0), 1e-14));
  CHECK(resamples == 0);

  // Rejections count and the fallback keeps the requested radius.
  int calls = 0;
  const Eigen::Vector2d fallback = select_plane_wave_direction(
      2.0, &preferred,
      [&calls](const Eigen::Vector2d&) { return ++calls > 3; }, rng, &resamples);
  CHECK(resamples == 3);
  CHECK(fallback.norm() == doctest::Approx(2.0).epsilon(1e-13));
  CHECK_FALSE(fallback.isApprox(preferred * (2.0 / preferred.norm()), 1e-10));

  // Sixteen failures exhaust the attempt budget.
  CHECK_THROWS_AS(select_plane_wave_direction(
                      1.0, nullptr, [](const Eigen::Vector2d&) { return false; }, rng, &resamples),
                  std::runtime_error);

  // The draw sequence is a pure function of the generator state.
  std::mt19937_64 a(123), b(123);
  const Eigen::Vector2d da = select_plane_wave_direction(
      1.0, nullptr, [](const Eigen::Vector2d&) { return true; }, a, nullptr);
  const Eigen::Vector2d db = select_plane_wave_direction(
      1.0, nullptr, [](const Eigen::Vector2d&) { return true; }, b, nullptr);
  CHECK(da == db);

  CHECK_THROWS_AS(select_plane_wave_direction(
                      0.0, nullptr, [](const Eigen::Vector2d&) { return true; }, rng, nullptr),
                  std::invalid_argument);
}

TEST_CASE("interlacing report for the free boundary on the square") {
  const PolygonalDomain d = make_domain("unit_square");
  const BoundaryOperatorSpec zero = parse_boundary_spec("zero");
  const InequalityReport r = verify_interlacing(d, zero, 2, coarse_opts());

  CHECK(r.domain == "unit_square");
  CHECK(r.theta == "zero");
  CHECK(r.constant_wave_case);
  REQUIRE(r.rows.size() == 2);
  REQUIRE(r.counting.size() == 2);

  // Row 1 is the classical second-membrane comparison: the second free
  // eigenvalue against the first fixed one, pi^2 vs 2 pi^2.
  CHECK(r.rows[0].j == 1);
  CHECK(r.rows[0].robin_next.value == doctest::Approx(M_PI * M_PI).epsilon(0.05));
  CHECK(r.rows[0].dirichlet.value == doctest::Approx(2.0 * M_PI * M_PI).epsilon(0.05));
  CHECK(r.rows[0].verdict == Verdict::holds_strict);
  CHECK(r.rows[0].margin > 0.0);
  CHECK(r.rows[1].verdict == Verdict::holds_strict);
  CHECK(r.overall == Verdict::holds_strict);

  // Side conditions: the zero operator satisfies everything.
  CHECK(r.conditions.eta_samples == 32);
  CHECK(r.conditions.plane_wave_max == 0.0);
  CHECK(r.conditions.plane_wave_nonpositive);
  CHECK(r.conditions.operator_nonpositive);
  CHECK(r.conditions.nonpositive_witness == 0.0);
  CHECK(r.conditions.admissible);
  CHECK(r.conditions.chain_expected);
  CHECK(r.conditions.chain_ok);

  // Counting at j = 1: the free problem puts at least two values below the
  // first fixed eigenvalue, which itself is simple.
  CHECK(r.counting[0].j == 1);
  CHECK(r.counting[0].dirichlet_upto == 1);
  CHECK(r.counting[0].robin_strictly_below >= 2);
  CHECK(r.counting[0].verdict == Verdict::holds_strict);
}

TEST_CASE("interlacing report flags a strongly positive weight") {
  const PolygonalDomain d = make_domain("unit_square");
  const InequalityReport r =
      verify_interlacing(d, parse_boundary_spec("mult:const:50"), 1, coarse_opts());

  CHECK(r.overall == Verdict::violated);
  CHECK_FALSE(r.constant_wave_case);
  CHECK_FALSE(r.conditions.plane_wave_nonpositive);
  CHECK(r.conditions.plane_wave_max > 0.0);
  CHECK_FALSE(r.conditions.operator_nonpositive);
  CHECK(r.conditions.nonpositive_witness > 0.0);
  CHECK_FALSE(r.conditions.chain_expected);
  // The weight is admissible (bounded multiplication); the conclusion fails
  // because the sign condition does, which is the point of the control.
  CHECK(r.conditions.admissible);
}

TEST_CASE("level validation") {
  const PolygonalDomain d = make_domain("unit_square");
  const BoundaryOperatorSpec zero = parse_boundary_spec("zero");
  HarnessOptions o;
  o.levels = {2, 4};
  CHECK_THROWS_AS(verify_interlacing(d, zero, 1, o), std::invalid_argument);
  o.levels = {3};
  CHECK_THROWS_AS(verify_interlacing(d, zero, 1, o), std::invalid_argument);
  o.levels = {};
  CHECK_THROWS_AS(verify_counting(d, zero, 1, o), std::invalid_argument);
  o.levels = {-1, 0};
  CHECK_THROWS_AS(verify_counting(d, zero, 1, o), std::invalid_argument);
  CHECK_THROWS_AS(verify_interlacing(d, zero, 0, coarse_opts()), std::invalid_argument);
}

TEST_CASE("counting verdict on the square free problem") {
  const CountingReport r = verify_counting(make_domain("unit_square"),
                                           parse_boundary_spec("zero"), 1, coarse_opts());
  CHECK(r.verdict == Verdict::holds_strict);
  CHECK(r.dirichlet_upto == 1);
  CHECK(r.robin_strictly_below >= 2);
  CHECK(r.domain == "unit_square");
  CHECK(r.theta == "zero");
  CHECK(r.j == 1);
  CHECK(r.dirichlet_j.value == doctest::Approx(2.0 * M_PI * M_PI).epsilon(0.05));
}

TEST_CASE("trial space bound on the square") {
  const PolygonalDomain d = make_domain("unit_square");
  const BoundaryOperatorSpec zero = parse_boundary_spec("zero");
  const TrialSpaceReport r = filonov_trial_check(d, zero, 1, coarse_opts());

  REQUIRE(r.levels.size() == 2);
  for (const TrialLevelResult& lv : r.levels) {
    CHECK(lv.lambda == doctest::Approx(2.0 * M_PI * M_PI).epsilon(0.1));
    CHECK(lv.dim_span >= 1);
    CHECK(lv.eta.norm() == doctest::Approx(std::sqrt(lv.lambda)).epsilon(1e-12));
    // The span contains the essential eigenvector, so the best Rayleigh
    // quotient over the trial space cannot fall below the eigenvalue.
    CHECK(lv.max_rayleigh >= lv.lambda * (1.0 - 1e-10));
    CHECK(lv.c_measured >= 0.0);
    CHECK(lv.resamples == 0);  // the sign condition is trivial for zero
  }
  CHECK(r.levels[0].h == doctest::Approx(2.0 * r.levels[1].h).epsilon(1e-12));

  // The direction angle is reused across levels: eta scales with the level
  // radius but points the same way.
  const Eigen::Vector2d e0 = r.levels[0].eta.normalized();
  const Eigen::Vector2d e1 = r.levels[1].eta.normalized();
  CHECK(e0.isApprox(e1, 1e-12));

  // A caller-pinned direction is honored after rescaling.
  const Eigen::Vector2d pin(1.0, 0.0);
  const TrialSpaceReport rp = filonov_trial_check(d, zero, 1, coarse_opts(), &pin);
  for (const TrialLevelResult& lv : rp.levels) {
    CHECK(lv.eta.normalized().isApprox(pin, 1e-12));
  }

  // Degenerate essential values widen the span: the second and third
  // eigenvalues of the square coincide.
  const TrialSpaceReport r2 = filonov_trial_check(d, zero, 2, coarse_opts());
  for (const TrialLevelResult& lv : r2.levels) CHECK(lv.dim_span >= 3);
}

TEST_CASE("plane wave certificates") {
  const PolygonalDomain d = make_domain("unit_square");
  const std::vector<Eigen::Vector2d> dirs = {{1.0, 0.0}, {0.33, 0.77}};
  const SafarovReport r =
      safarov_weak_check(d, parse_boundary_spec("mult:const:-1"), 1, dirs, coarse_opts());

  REQUIRE(r.etas.size() == 2);
  for (const EtaCertificate& c : r.etas) {
    CHECK(c.certifies);
    CHECK(c.value == doctest::Approx(-4.0).epsilon(1e-10));
    CHECK(c.rescaled);  // neither input had the eigenvalue radius
    CHECK(c.eta.norm() == doctest::Approx(std::sqrt(r.dirichlet_j.value)).epsilon(1e-10));
  }
  CHECK(r.certifying_distinct == 2);
  CHECK(r.weak_certified);
  CHECK(r.strict_certified);
  CHECK(r.interlacing_verdict == Verdict::holds_strict);

  // The same direction twice certifies weakly but not strictly.
  const SafarovReport same = safarov_weak_check(
      d, parse_boundary_spec("mult:const:-1"), 1,
      {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(2.0, 0.0)}, coarse_opts());
  CHECK(same.certifying_distinct == 1);
  CHECK(same.weak_certified);
  CHECK_FALSE(same.strict_certified);

  // A positive weight certifies nothing.
  const SafarovReport pos = safarov_weak_check(
      d, parse_boundary_spec("mult:const:1"), 1, dirs, coarse_opts());
  CHECK_FALSE(pos.weak_certified);
  CHECK(pos.etas[0].value == doctest::Approx(4.0).epsilon(1e-10));

  CHECK_THROWS_AS(safarov_weak_check(d, parse_boundary_spec("zero"), 1, {}, coarse_opts()),
                  std::invalid_argument);
}

TEST_CASE("trace constant shrinks as the gradient share grows") {
  const TriangleMesh mesh = mesh_at_level(make_domain("unit_square"), 2);
  const BoundaryTraversal tr = boundary_traversal(mesh);

  const double b4 = trace_beta(mesh, tr, 0.4);
  const double b2 = trace_beta(mesh, tr, 0.2);
  const double b1 = trace_beta(mesh, tr, 0.1);
  CHECK(b4 > 0.0);
  CHECK(b2 >= b4);
  CHECK(b1 >= b2);

  // Nested refinement can only raise the discrete supremum.
  const TriangleMesh fine = mesh_at_level(make_domain("unit_square"), 3);
  const double b2f = trace_beta(fine, boundary_traversal(fine), 0.2);
  CHECK(b2f >= b2 - 1e-9);

  CHECK_THROWS_AS(trace_beta(mesh, tr, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(trace_beta(mesh, tr, -1.0), std::invalid_argument);
}

TEST_CASE("coercivity shift") {
  const TriangleMesh mesh = mesh_at_level(make_domain("unit_square"), 2);
  const BoundaryTraversal tr = boundary_traversal(mesh);

  // With no boundary operator the form is (1/2)|u|_H1^2 + (1/2)|u|^2 - ...:
  // the shift is exactly one half.
  const double k0 = coercivity_kappa(mesh, tr, parse_boundary_spec("zero"));
  CHECK(k0 == doctest::Approx(0.5).epsilon(1e-10));

  const double k1 = coercivity_kappa(mesh, tr, parse_boundary_spec("mult:const:-1"));
  const double k4 = coercivity_kappa(mesh, tr, parse_boundary_spec("mult:const:-4"));
  CHECK(k1 > 0.5);
  CHECK(k4 > k1);
}

TEST_CASE("report json is deterministic and schema-tagged") {
  const PolygonalDomain d = make_domain("unit_square");
  const BoundaryOperatorSpec zero = parse_boundary_spec("zero");
  const InequalityReport r1 = verify_interlacing(d, zero, 1, coarse_opts());
  const InequalityReport r2 = verify_interlacing(d, zero, 1, coarse_opts());

  const std::string j1 = to_json(r1);
  const std::string j2 = to_json(r2);
  CHECK(j1 == j2);

  const nlohmann::json parsed = nlohmann::json::parse(j1);
  CHECK(parsed.at("schema_version") == 1);
  CHECK(parsed.at("kind") == "interlacing");
  CHECK(parsed.at("problem").at("domain") == "unit_square");
  CHECK(parsed.at("problem").at("theta") == "zero");
  CHECK(parsed.at("constant_wave_case") == true);
  CHECK(parsed.at("overall") == "holds_strict");
  REQUIRE(parsed.at("rows").size() == 1);
  const auto& row = parsed.at("rows")[0];
  CHECK(row.at("j") == 1);
  CHECK(row.contains("lambda_theta"));
  CHECK(row.contains("lambda_theta_err"));
  CHECK(row.contains("lambda_dirichlet"));
  CHECK(row.contains("lambda_dirichlet_err"));
  CHECK(row.contains("margin"));
  CHECK(row.at("verdict") == "holds_strict");
  REQUIRE(parsed.at("counting").size() == 1);
  CHECK(parsed.at("counting")[0].at("dirichlet_upto") == 1);
  CHECK(parsed.at("conditions").contains("plane_wave_max"));
  CHECK(parsed.at("conditions").at("chain_ok") == true);
  CHECK(parsed.at("environment").at("levels") == std::vector<int>({2, 3}));
  CHECK(parsed.at("environment").at("seed") == 42);

  // The other report kinds carry the same envelope.
  const CountingReport cr = verify_counting(d, zero, 1, coarse_opts());
  const nlohmann::json cj = nlohmann::json::parse(to_json(cr));
  CHECK(cj.at("kind") == "counting");
  CHECK(cj.at("schema_version") == 1);

  const TrialSpaceReport tr = filonov_trial_check(d, zero, 1, coarse_opts());
  const nlohmann::json tj = nlohmann::json::parse(to_json(tr));
  CHECK(tj.at("kind") == "trial_space");
  REQUIRE(tj.at("levels").size() == 2);
  CHECK(tj.at("levels")[0].contains("c_measured"));

  const SafarovReport sr = safarov_weak_check(d, parse_boundary_spec("mult:const:-1"), 1,
                                              {Eigen::Vector2d(1.0, 0.0)}, coarse_opts());
  const nlohmann::json sj = nlohmann::json::parse(to_json(sr));
  CHECK(sj.at("kind") == "plane_wave_certificate");
  CHECK(sj.at("weak_certified") == true);
}
