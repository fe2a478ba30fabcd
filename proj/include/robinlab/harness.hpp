// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ROBINLAB_HARNESS_HPP
#define ROBINLAB_HARNESS_HPP

#include "robinlab/assembly.hpp"
#include "robinlab/boundary_ops.hpp"
#include "robinlab/eigensolve.hpp"
#include "robinlab/geometry.hpp"

#include <Eigen/Core>

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace robinlab {

// Eigenvalue comparisons are made between extrapolated values with error
// bars; a verdict is only strict or violated when the bars separate.
enum class Verdict { holds_strict, holds_weak, inconclusive, violated };
const char* to_string(Verdict v);

struct ValueWithError {
  double value = 0.0;
  double error = 0.0;
};

struct HarnessOptions {
  std::vector<int> levels = {4, 5};  // two or three nested refinements
  unsigned long long seed = 42;
  double merge_rtol = 1e-8;
  double delta = 0.1;   // smallness budget for classify()
  int eta_samples = 32;
  SolveOptions solver;
};

struct InequalityRow {
  int j = 0;
  ValueWithError robin_next;  // (j+1)-th eigenvalue with the boundary operator
  ValueWithError dirichlet;   // j-th Dirichlet eigenvalue
  double margin = 0.0;        // separation of the error bars, positive when strict
  Verdict verdict = Verdict::inconclusive;
};

struct ConditionSummary {
  int eta_samples = 0;
  double plane_wave_max = 0.0;
  bool plane_wave_nonpositive = false;
  double nonpositive_witness = 0.0;
  bool operator_nonpositive = false;
  bool admissible = false;
  bool chain_expected = false;  // the ordering rows are an invariant only for
                                // operators that pass the nonpositivity check
  bool chain_ok = false;        // robin_j <= neumann_j <= dirichlet_j within bars
};

struct CountingReport {
  std::string domain;
  std::string theta;
  HarnessOptions options;
  int j = 0;
  ValueWithError dirichlet_j;
  int robin_strictly_below = 0;  // certified by separated bars
  int robin_ambiguous = 0;       // bars straddle the threshold
  int dirichlet_upto = 0;        // spectrum count through the j-th value, ties merged
  Verdict verdict = Verdict::inconclusive;
};

struct InequalityReport {
  std::string domain;
  std::string theta;
  HarnessOptions options;
  bool constant_wave_case = false;  // zero operator: row 1 is the classical
                                    // second-membrane comparison
  std::vector<InequalityRow> rows;
  std::vector<CountingReport> counting;  // one row per j
  ConditionSummary conditions;
  Verdict overall = Verdict::inconclusive;  // worst row verdict
};

// Compares the (j+1)-th spectrum of the boundary-operator problem against
// the j-th Dirichlet eigenvalue for j = 1..J, Richardson-extrapolated over
// opts.levels, plus the counting table and the side conditions evaluated on
// the finest mesh.
InequalityReport verify_interlacing(const PolygonalDomain& domain,
                                    const BoundaryOperatorSpec& spec, int J,
                                    const HarnessOptions& opts = {});

// Counts boundary-operator eigenvalues strictly below the j-th Dirichlet
// eigenvalue; the claim under test is count >= dirichlet_upto + 1.
CountingReport verify_counting(const PolygonalDomain& domain, const BoundaryOperatorSpec& spec,
                               int j, const HarnessOptions& opts = {});

// Comparator behind verify_counting, exposed so edge verdicts can be driven
// with synthetic spectra.
CountingReport counting_verdict(const std::vector<ValueWithError>& robin,
                                const std::vector<ValueWithError>& dirichlet, int j,
                                double merge_rtol = 1e-8);

struct TrialLevelResult {
  int level = 0;
  double h = 0.0;
  double lambda = 0.0;      // discrete j-th Dirichlet eigenvalue at this level
  int dim_span = 0;         // Dirichlet eigenvectors up to lambda
  int dim_kernel = 0;       // boundary-problem eigenvectors at lambda
  int resamples = 0;
  Eigen::Vector2d eta = Eigen::Vector2d::Zero();
  double max_rayleigh = 0.0;
  double c_measured = 0.0;  // (max_rayleigh/lambda - 1) / h^2
};

struct TrialSpaceReport {
  std::string domain;
  std::string theta;
  HarnessOptions options;
  int j = 0;
  std::vector<TrialLevelResult> levels;
};

// Rayleigh bound over the trial space spanned by Dirichlet eigenvectors up
// to the j-th eigenvalue, any boundary-problem eigenvectors at that value,
// and the nodal interpolant of a plane wave e^{i x.eta} with |eta|^2 equal
// to it. The plane-wave direction must satisfy the sign condition (checked
// by sampling); Gram-deficient directions are resampled.
TrialSpaceReport filonov_trial_check(const PolygonalDomain& domain,
                                     const BoundaryOperatorSpec& spec, int j,
                                     const HarnessOptions& opts = {},
                                     const Eigen::Vector2d* eta0 = nullptr);

// Single-level building block used by filonov_trial_check; callers holding
// precomputed spectra (vectors required) can share them across j.
TrialLevelResult filonov_trial_level(const TriangleMesh& mesh, const BoundaryTraversal& traversal,
                                     const BoundaryOperatorSpec& spec, const DiscreteForm& stiffness,
                                     const DiscreteForm& mass, const DiscreteForm& theta_form,
                                     const DirichletReduction& reduction,
                                     const Spectrum& dirichlet, const Spectrum& robin, int j,
                                     const Eigen::Vector2d* eta0, std::mt19937_64& rng);

// Draws directions of the given radius until accept() takes one; at most 16
// attempts, the preferred direction (if any) tried first. Returns the chosen
// direction and the number of rejected candidates through *resamples.
Eigen::Vector2d select_plane_wave_direction(double radius, const Eigen::Vector2d* preferred,
                                            const std::function<bool(const Eigen::Vector2d&)>& accept,
                                            std::mt19937_64& rng, int* resamples);

struct EtaCertificate {
  Eigen::Vector2d eta_given = Eigen::Vector2d::Zero();
  Eigen::Vector2d eta = Eigen::Vector2d::Zero();  // after radius normalization
  bool rescaled = false;
  double value = 0.0;
  bool certifies = false;
};

struct SafarovReport {
  std::string domain;
  std::string theta;
  HarnessOptions options;
  int j = 0;
  ValueWithError dirichlet_j;
  std::vector<EtaCertificate> etas;
  int certifying_distinct = 0;
  bool weak_certified = false;    // one certifying direction
  bool strict_certified = false;  // two distinct certifying directions
  Verdict interlacing_verdict = Verdict::inconclusive;
};

// Evaluates the plane-wave sign certificate at caller-chosen directions
// (radius-normalized to the j-th Dirichlet eigenvalue) and cross-references
// the interlacing verdict at the same index.
SafarovReport safarov_weak_check(const PolygonalDomain& domain, const BoundaryOperatorSpec& spec,
                                 int j, const std::vector<Eigen::Vector2d>& etas,
                                 const HarnessOptions& opts = {});

// Largest eigenvalue of the pencil (T - eps*A, M): the best constant beta in
// the discrete trace inequality |u|^2_boundary <= eps |grad u|^2 + beta |u|^2.
double trace_beta(const TriangleMesh& mesh, const BoundaryTraversal& traversal, double eps,
                  const SolveOptions& solver = {});

// Smallest kappa with a_Theta + kappa (u,u) >= (1/2) |u|^2_H1 discretely:
// the largest eigenvalue of ((A+M)/2 - A - B, M). Zero operator gives 1/2.
double coercivity_kappa(const TriangleMesh& mesh, const BoundaryTraversal& traversal,
                        const BoundaryOperatorSpec& spec, const SolveOptions& solver = {});

// Deterministic JSON renderings (schema_version 1, stable key order).
std::string to_json(const InequalityReport& report);
std::string to_json(const CountingReport& report);
std::string to_json(const TrialSpaceReport& report);
std::string to_json(const SafarovReport& report);

}  // namespace robinlab

#endif
