// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ROBINLAB_ASSEMBLY_HPP
#define ROBINLAB_ASSEMBLY_HPP

#include "robinlab/geometry.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <vector>

namespace robinlab {

enum class FormKind { stiffness, mass, boundary, nonlocal, composite };

// Symmetric bilinear form over piecewise-linear nodal basis functions.
struct DiscreteForm {
  Eigen::SparseMatrix<double> matrix;
  FormKind kind = FormKind::composite;

  int dim() const { return static_cast<int>(matrix.rows()); }
  double quadratic(const Eigen::VectorXd& u) const { return u.dot(matrix * u); }
  // Max-norm symmetry defect relative to the largest entry.
  double symmetry_defect() const;
};

DiscreteForm assemble_stiffness(const TriangleMesh& mesh);
DiscreteForm assemble_mass(const TriangleMesh& mesh);

// Boundary form \int theta(s) u v ds, theta sampled at the two-point Gauss
// nodes of each boundary edge; exact when theta is constant per edge.
DiscreteForm assemble_boundary_weighted(const TriangleMesh& mesh,
                                        const BoundaryTraversal& traversal,
                                        const std::function<double(double)>& theta_of_s);

// Same form with theta constant on each polygon side; side_values is indexed
// by BoundaryEdge::side, so the weight is refinement-invariant.
DiscreteForm assemble_boundary_weighted(const TriangleMesh& mesh,
                                        const BoundaryTraversal& traversal,
                                        const std::vector<double>& side_values);

// Double boundary form \int\int k(s,t) u(s) v(t) ds dt. The kernel is
// symmetrized before use; the assembled block is dense on boundary nodes.
DiscreteForm assemble_nonlocal(const TriangleMesh& mesh,
                               const BoundaryTraversal& traversal,
                               const std::function<double(double, double)>& kernel);

// Restriction of a nodal form to interior nodes (homogeneous essential
// conditions). Fails when the mesh has no interior node.
struct DirichletReduction {
  std::vector<int> interior;  // interior node indices, ascending
  DiscreteForm stiffness;
  DiscreteForm mass;
};

DirichletReduction reduce_dirichlet(const DiscreteForm& stiffness,
                                    const DiscreteForm& mass,
                                    const TriangleMesh& mesh);

// Weak natural-condition defect of a discrete eigenpair: the pair is
// prolonged to the once-refined mesh and the residual of the combined form
// is tested against the refined boundary hats, measured in the dual norm of
// the refined boundary mass. theta_on rebuilds the boundary operator form on
// the enriched mesh. Fails unless (u, lambda) solves the discrete problem on
// the input mesh.
double neumann_trace_residual(
    const TriangleMesh& mesh, const BoundaryTraversal& traversal,
    const Eigen::VectorXd& u, double lambda,
    const std::function<DiscreteForm(const TriangleMesh&, const BoundaryTraversal&)>& theta_on);

}  // namespace robinlab

#endif
