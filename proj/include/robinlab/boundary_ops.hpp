// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ROBINLAB_BOUNDARY_OPS_HPP
#define ROBINLAB_BOUNDARY_OPS_HPP

#include "robinlab/assembly.hpp"
#include "robinlab/geometry.hpp"

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace robinlab {

// Self-adjoint operators on boundary traces, described symbolically and
// discretized on demand. Every representable operator here factors through
// square-integrable boundary data; admissibility checks live in classify().

struct ZeroOp {};

struct MultiplicationOp {
  // Exactly one representation: constants per polygon side, or a callable of
  // arclength sampled at boundary quadrature points.
  std::vector<double> side_values;
  std::function<double(double)> theta;
  // Declared integrability exponent of the weight. Values <= 1 leave the
  // trace pairing unverifiable and are rejected by discretization.
  double lp_exponent = std::numeric_limits<double>::infinity();
};

struct KernelOp {
  // k(s, t, perimeter); must be symmetric in (s, t).
  std::function<double(double, double, double)> k;
};

struct RankOneOp {
  std::function<double(double)> g;  // profile of arclength
  double coefficient = 0.0;
};

// Splitting role a part plays in the admissibility argument: bounded below
// as a form, factoring through boundary L2, or small in the trace-space
// proxy norm (budgeted by delta).
enum class PartRole { semibounded, l2_factoring, small_norm };

struct OperatorPart {
  std::variant<ZeroOp, MultiplicationOp, KernelOp, RankOneOp> op;
  PartRole role = PartRole::l2_factoring;
};

enum class SignClaim { unknown, nonpositive };

struct BoundaryOperatorSpec {
  std::vector<OperatorPart> parts;
  std::string text;  // canonical spelling, used in reports and hashes
  bool self_adjoint = true;
  SignClaim sign_claim = SignClaim::unknown;

  bool is_zero() const;
};

// Spec grammar:
//   zero
//   mult:const:<v>
//   mult:edges:<v1,v2,...>          one value per polygon side
//   rank1:const:<c>                 c <g,.> g with g = 1
//   kernel:cosine:<a>:<m>           k(s,t) = a cos(2 pi m (s-t)/perimeter)
//   sum:(<spec>;<spec>;...)         flat composite of the above
BoundaryOperatorSpec parse_boundary_spec(const std::string& text);

// Galerkin matrix of the operator on the mesh boundary, summed over parts.
// Kernels are symmetrized; rank-one profiles are integrated against the
// boundary hats. Rejects specs whose pairing is unverifiable.
DiscreteForm theta_matrix(const TriangleMesh& mesh, const BoundaryTraversal& traversal,
                          const BoundaryOperatorSpec& spec);

// Sesquilinear value <f, Theta f> for the boundary trace of f = e^{i x.eta},
// sampled exactly at the boundary quadrature points (independent of any
// nodal interpolation). The imaginary part must vanish up to roundoff; a
// violation means the spec is not self-adjoint and raises an error.
double plane_wave_form(const TriangleMesh& mesh, const BoundaryTraversal& traversal,
                       const BoundaryOperatorSpec& spec, const Eigen::Vector2d& eta);

struct NonpositivityVerdict {
  bool nonpositive = false;
  double witness = 0.0;  // largest eigenvalue of the boundary block
  double scale = 0.0;    // largest absolute entry of the block
};

// Dense eigendecomposition of the form's boundary block; passes when the
// largest eigenvalue stays within tol * scale.
NonpositivityVerdict check_nonpositive(const DiscreteForm& theta_form, double tol = 1e-10);

// Quadrature Lp norm of a multiplication weight over the boundary; p must
// exceed 1 (infinity takes the max over samples).
double lp_norm(const MultiplicationOp& op, double p, const TriangleMesh& mesh,
               const BoundaryTraversal& traversal);

struct PartVerdict {
  std::string description;
  PartRole role = PartRole::l2_factoring;
  bool pass = false;
  double metric = 0.0;  // Lp norm, proxy norm, or form lower bound
  std::string reason;
};

struct AdmissibilityVerdict {
  bool pass = false;
  double delta = 0.1;
  std::vector<PartVerdict> parts;
};

// Per-part admissibility: integrability of multiplication weights, symmetry
// spot checks for kernels (64 random pairs), and for small_norm parts the
// proxy norm bound. The proxy norm is the largest generalized eigenvalue
// magnitude of the part against N = T + (T L T)^{1/2}, with T the boundary
// mass and L the arclength Laplacian along the boundary loop.
AdmissibilityVerdict classify(const BoundaryOperatorSpec& spec, const TriangleMesh& mesh,
                              const BoundaryTraversal& traversal, double delta = 0.1);

}  // namespace robinlab

#endif
