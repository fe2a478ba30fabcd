// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ROBINLAB_EIGENSOLVE_HPP
#define ROBINLAB_EIGENSOLVE_HPP

#include "robinlab/assembly.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

namespace robinlab {

struct SolveOptions {
  // At or below this dimension the pencil is reduced densely; above it a
  // shift-invert Krylov iteration with full reorthogonalization is used.
  int dense_threshold = 2000;
  bool want_vectors = true;
  unsigned long long seed = 42;
  // Accept an eigenpair once |K x - lambda M x| in the M-inverse norm is
  // within rtol*|lambda| + atol.
  double residual_rtol = 1e-9;
  double residual_atol = 1e-12;
  int max_restarts = 8;
};

struct Spectrum {
  std::string problem;
  int total_dim = 0;
  bool used_krylov = false;
  std::vector<double> eigenvalues;  // ascending, repeated per multiplicity
  Eigen::MatrixXd vectors;          // M-orthonormal columns; 0x0 if not requested

  struct Cluster {
    double value = 0.0;    // mean of merged members
    int first_index = 0;   // 0-based position of first member
    int multiplicity = 1;
  };
  // Adjacent eigenvalues closer than rtol (relatively) are one cluster.
  std::vector<Cluster> clusters(double merge_rtol = 1e-8) const;
};

// Smallest `count` eigenpairs of K x = lambda M x with K symmetric and M
// symmetric positive definite.
Spectrum solve(const DiscreteForm& stiffness, const DiscreteForm& mass, int count,
               const SolveOptions& options = {});

// Number of computed eigenvalues <= lambda. Fails when lambda lies beyond
// the computed window and the window is not the whole spectrum.
int counting_function(const Spectrum& spectrum, double lambda);

// Eigenvalues of the pencil strictly below lambda, by Sylvester inertia of
// K - lambda M. If lambda grazes an eigenvalue the shift is nudged upward
// and the result is flagged.
struct InertiaResult {
  int below = 0;
  bool perturbed = false;
  double lambda_used = 0.0;
};
InertiaResult inertia_count(const DiscreteForm& stiffness, const DiscreteForm& mass,
                            double lambda, int dense_threshold = 2000);

// h^2 Richardson extrapolation across nested refinements (mesh size halves
// between arguments). With three levels the observed convergence order is
// measured and extrapolation is refused below order 1.5, falling back to the
// finest value with the last level gap as the error bar.
struct ExtrapolatedValue {
  double value = 0.0;
  double error = 0.0;  // half-width of the trust interval
  double order = 0.0;  // NaN when only two levels are given
  bool extrapolated = true;
};
struct ExtrapolatedSpectrum {
  std::vector<ExtrapolatedValue> values;
};
ExtrapolatedSpectrum richardson(const Spectrum& coarse, const Spectrum& fine);
ExtrapolatedSpectrum richardson(const Spectrum& coarse, const Spectrum& mid,
                                const Spectrum& fine);

// CSV with one row per merged cluster:
//   index,eigenvalue,multiplicity,error_estimate
// index is 1-based over the expanded spectrum; 17 significant digits.
void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum,
                        const std::vector<double>* errors = nullptr,
                        double merge_rtol = 1e-8);

}  // namespace robinlab

#endif
