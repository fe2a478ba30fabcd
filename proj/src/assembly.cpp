// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#include "robinlab/assembly.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <stdexcept>

namespace robinlab {

namespace {

// Two-point Gauss nodes on the unit interval, matching boundary_traversal.
constexpr double kGaussA = 0.5 * (1.0 - 0.57735026918962576451);
constexpr double kGaussB = 0.5 * (1.0 + 0.57735026918962576451);

using Triplet = Eigen::Triplet<double>;

DiscreteForm from_triplets(int n, const std::vector<Triplet>& trips, FormKind kind) {
  DiscreteForm f;
  f.kind = kind;
  f.matrix.resize(n, n);
  f.matrix.setFromTriplets(trips.begin(), trips.end());
  f.matrix.makeCompressed();
  return f;
}

}  // namespace

double DiscreteForm::symmetry_defect() const {
  const Eigen::SparseMatrix<double> d = matrix - Eigen::SparseMatrix<double>(matrix.transpose());
  double dmax = 0.0;
  for (int k = 0; k < d.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(d, k); it; ++it) {
      dmax = std::max(dmax, std::abs(it.value()));
    }
  }
  double scale = 0.0;
  for (int k = 0; k < matrix.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it) {
      scale = std::max(scale, std::abs(it.value()));
    }
  }
  return scale > 0.0 ? dmax / scale : dmax;
}

DiscreteForm assemble_stiffness(const TriangleMesh& mesh) {
  std::vector<Triplet> trips;
  trips.reserve(mesh.triangles.size() * 9);
  for (const auto& t : mesh.triangles) {
    const Eigen::Vector2d& p0 = mesh.nodes[t[0]];
    const Eigen::Vector2d& p1 = mesh.nodes[t[1]];
    const Eigen::Vector2d& p2 = mesh.nodes[t[2]];
    const double twice_area = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
    Eigen::Matrix<double, 2, 3> g;
    // Barycentric gradient: opposite edge rotated a quarter turn, over 2|T|.
    g.col(0) = Eigen::Vector2d(-(p2 - p1).y(), (p2 - p1).x()) / twice_area;
    g.col(1) = Eigen::Vector2d(-(p0 - p2).y(), (p0 - p2).x()) / twice_area;
    g.col(2) = Eigen::Vector2d(-(p1 - p0).y(), (p1 - p0).x()) / twice_area;
    const double area = 0.5 * twice_area;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        trips.emplace_back(t[i], t[j], area * g.col(i).dot(g.col(j)));
      }
    }
  }
  return from_triplets(mesh.num_nodes(), trips, FormKind::stiffness);
}

DiscreteForm assemble_mass(const TriangleMesh& mesh) {
  std::vector<Triplet> trips;
  trips.reserve(mesh.triangles.size() * 9);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto& t = mesh.triangles[k];
    const double w = mesh.triangle_area(k) / 12.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        trips.emplace_back(t[i], t[j], w * (i == j ? 2.0 : 1.0));
      }
    }
  }
  return from_triplets(mesh.num_nodes(), trips, FormKind::mass);
}

DiscreteForm assemble_boundary_weighted(const TriangleMesh& mesh,
                                        const BoundaryTraversal& traversal,
                                        const std::function<double(double)>& theta_of_s) {
  if (!theta_of_s) throw std::invalid_argument("assembly: null boundary weight");
  std::vector<Triplet> trips;
  trips.reserve(traversal.edge_order.size() * 8);
  for (size_t k = 0; k < traversal.edge_order.size(); ++k) {
    const auto& e = mesh.boundary_edges[traversal.edge_order[k]];
    const int idx[2] = {e.a, e.b};
    for (int g = 0; g < 2; ++g) {
      const auto& qp = traversal.quadrature[2 * k + g];
      const double th = theta_of_s(qp.s);
      if (!std::isfinite(th)) {
        throw std::runtime_error("assembly: boundary weight is not finite at a quadrature point");
      }
      const double t = (g == 0) ? kGaussA : kGaussB;
      const double phi[2] = {1.0 - t, t};
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          trips.emplace_back(idx[i], idx[j], qp.w * th * phi[i] * phi[j]);
        }
      }
    }
  }
  return from_triplets(mesh.num_nodes(), trips, FormKind::boundary);
}

DiscreteForm assemble_boundary_weighted(const TriangleMesh& mesh,
                                        const BoundaryTraversal& traversal,
                                        const std::vector<double>& side_values) {
  for (const auto& e : mesh.boundary_edges) {
    if (e.side < 0 || e.side >= static_cast<int>(side_values.size())) {
      throw std::invalid_argument("assembly: side weight list does not cover every polygon side");
    }
  }
  std::vector<Triplet> trips;
  trips.reserve(traversal.edge_order.size() * 8);
  for (size_t k = 0; k < traversal.edge_order.size(); ++k) {
    const auto& e = mesh.boundary_edges[traversal.edge_order[k]];
    const double th = side_values[e.side];
    const int idx[2] = {e.a, e.b};
    const double len = mesh.edge_length(traversal.edge_order[k]);
    // Constant weight per edge integrates exactly: (len/6) [[2,1],[1,2]].
    const double d = th * len / 3.0;
    const double o = th * len / 6.0;
    trips.emplace_back(idx[0], idx[0], d);
    trips.emplace_back(idx[1], idx[1], d);
    trips.emplace_back(idx[0], idx[1], o);
    trips.emplace_back(idx[1], idx[0], o);
  }
  return from_triplets(mesh.num_nodes(), trips, FormKind::boundary);
}

DiscreteForm assemble_nonlocal(const TriangleMesh& mesh,
                               const BoundaryTraversal& traversal,
                               const std::function<double(double, double)>& kernel) {
  if (!kernel) throw std::invalid_argument("assembly: null kernel");
  const int nq = static_cast<int>(traversal.quadrature.size());

  // Flatten quadrature data: owning nodes and hat values per point.
  std::vector<int> na(nq), nb(nq);
  std::vector<double> pa(nq), pb(nq);
  for (size_t k = 0; k < traversal.edge_order.size(); ++k) {
    const auto& e = mesh.boundary_edges[traversal.edge_order[k]];
    for (int g = 0; g < 2; ++g) {
      const int q = static_cast<int>(2 * k) + g;
      const double t = (g == 0) ? kGaussA : kGaussB;
      na[q] = e.a;
      nb[q] = e.b;
      pa[q] = 1.0 - t;
      pb[q] = t;
    }
  }

  // Compact boundary numbering; the block is dense in general.
  std::vector<int> compact(mesh.num_nodes(), -1);
  std::vector<int> bnodes;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (mesh.on_boundary[i]) {
      compact[i] = static_cast<int>(bnodes.size());
      bnodes.push_back(i);
    }
  }
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(bnodes.size(), bnodes.size());

  for (int q = 0; q < nq; ++q) {
    const auto& qp = traversal.quadrature[q];
    for (int r = 0; r < nq; ++r) {
      const auto& qr = traversal.quadrature[r];
      const double ks = 0.5 * (kernel(qp.s, qr.s) + kernel(qr.s, qp.s));
      if (!std::isfinite(ks)) {
        throw std::runtime_error("assembly: kernel is not finite at a quadrature pair");
      }
      const double w = qp.w * qr.w * ks;
      const int rows[2] = {compact[na[q]], compact[nb[q]]};
      const int cols[2] = {compact[na[r]], compact[nb[r]]};
      const double rphi[2] = {pa[q], pb[q]};
      const double cphi[2] = {pa[r], pb[r]};
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          block(rows[i], cols[j]) += w * rphi[i] * cphi[j];
        }
      }
    }
  }

  std::vector<Triplet> trips;
  trips.reserve(bnodes.size() * bnodes.size());
  for (size_t i = 0; i < bnodes.size(); ++i) {
    for (size_t j = 0; j < bnodes.size(); ++j) {
      if (block(i, j) != 0.0) trips.emplace_back(bnodes[i], bnodes[j], block(i, j));
    }
  }
  return from_triplets(mesh.num_nodes(), trips, FormKind::nonlocal);
}

DirichletReduction reduce_dirichlet(const DiscreteForm& stiffness,
                                    const DiscreteForm& mass,
                                    const TriangleMesh& mesh) {
  if (stiffness.dim() != mesh.num_nodes() || mass.dim() != mesh.num_nodes()) {
    throw std::invalid_argument("assembly: form dimension does not match mesh");
  }
  DirichletReduction red;
  std::vector<int> to_interior(mesh.num_nodes(), -1);
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (!mesh.on_boundary[i]) {
      to_interior[i] = static_cast<int>(red.interior.size());
      red.interior.push_back(i);
    }
  }
  if (red.interior.empty()) {
    throw std::invalid_argument("assembly: no interior nodes; refine the mesh first");
  }

  auto restrict_form = [&](const DiscreteForm& f, FormKind kind) {
    std::vector<Triplet> trips;
    trips.reserve(f.matrix.nonZeros());
    for (int k = 0; k < f.matrix.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(f.matrix, k); it; ++it) {
        const int i = to_interior[it.row()];
        const int j = to_interior[it.col()];
        if (i >= 0 && j >= 0) trips.emplace_back(i, j, it.value());
      }
    }
    return from_triplets(static_cast<int>(red.interior.size()), trips, kind);
  };
  red.stiffness = restrict_form(stiffness, FormKind::stiffness);
  red.mass = restrict_form(mass, FormKind::mass);
  return red;
}

double neumann_trace_residual(
    const TriangleMesh& mesh, const BoundaryTraversal& traversal,
    const Eigen::VectorXd& u, double lambda,
    const std::function<DiscreteForm(const TriangleMesh&, const BoundaryTraversal&)>& theta_on) {
  if (u.size() != mesh.num_nodes()) {
    throw std::invalid_argument("assembly: eigenvector length does not match mesh");
  }
  const DiscreteForm a = assemble_stiffness(mesh);
  const DiscreteForm m = assemble_mass(mesh);
  const DiscreteForm b = theta_on ? theta_on(mesh, traversal)
                                  : DiscreteForm{Eigen::SparseMatrix<double>(u.size(), u.size()),
                                                 FormKind::boundary};

  // The floor term keeps the gate meaningful for kernel modes (lambda ~ 0,
  // A u ~ roundoff), where every norm in sight collapses to machine noise.
  const Eigen::VectorXd res = a.matrix * u + b.matrix * u - lambda * (m.matrix * u);
  const double floor =
      (a.matrix.norm() + std::abs(lambda) * m.matrix.norm() + b.matrix.norm()) * u.norm();
  const double scale = (a.matrix * u).norm() + std::abs(lambda) * (m.matrix * u).norm() +
                       (b.matrix * u).norm() + floor + 1e-300;
  if (res.norm() > 1e-8 * scale) {
    throw std::invalid_argument("assembly: (u, lambda) is not a discrete eigenpair of this mesh");
  }

  const RefinedMesh fine = refine_with_parents(mesh);
  Eigen::VectorXd uf(fine.mesh.num_nodes());
  uf.head(u.size()) = u;
  for (size_t k = 0; k < fine.midpoint_parents.size(); ++k) {
    const auto& par = fine.midpoint_parents[k];
    uf[u.size() + static_cast<Eigen::Index>(k)] = 0.5 * (u[par[0]] + u[par[1]]);
  }

  const BoundaryTraversal tf = boundary_traversal(fine.mesh);
  const DiscreteForm af = assemble_stiffness(fine.mesh);
  const DiscreteForm mf = assemble_mass(fine.mesh);
  const DiscreteForm bf = theta_on ? theta_on(fine.mesh, tf)
                                   : DiscreteForm{Eigen::SparseMatrix<double>(uf.size(), uf.size()),
                                                  FormKind::boundary};
  const Eigen::VectorXd rf = af.matrix * uf + bf.matrix * uf - lambda * (mf.matrix * uf);

  // Test against refined boundary hats; measure in the dual norm of the
  // refined boundary mass (Riesz lift to L2 of the boundary).
  std::vector<int> bnodes;
  for (int i = 0; i < fine.mesh.num_nodes(); ++i) {
    if (fine.mesh.on_boundary[i]) bnodes.push_back(i);
  }
  const DiscreteForm tmass =
      assemble_boundary_weighted(fine.mesh, tf, [](double) { return 1.0; });
  const int nb = static_cast<int>(bnodes.size());
  Eigen::SparseMatrix<double> tb(nb, nb);
  {
    std::vector<int> compact(fine.mesh.num_nodes(), -1);
    for (int i = 0; i < nb; ++i) compact[bnodes[i]] = i;
    std::vector<Triplet> trips;
    for (int k = 0; k < tmass.matrix.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(tmass.matrix, k); it; ++it) {
        const int i = compact[it.row()];
        const int j = compact[it.col()];
        if (i >= 0 && j >= 0) trips.emplace_back(i, j, it.value());
      }
    }
    tb.setFromTriplets(trips.begin(), trips.end());
  }
  Eigen::VectorXd rb(nb);
  for (int i = 0; i < nb; ++i) rb[i] = rf[bnodes[i]];

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(tb);
  if (chol.info() != Eigen::Success) {
    throw std::runtime_error("assembly: boundary mass factorization failed");
  }
  const double sq = rb.dot(chol.solve(rb));
  return std::sqrt(std::max(0.0, sq));
}

}  // namespace robinlab
