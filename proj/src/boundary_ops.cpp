// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#include "robinlab/boundary_ops.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

namespace robinlab {

namespace {

constexpr double kGaussA = 0.5 * (1.0 - 0.57735026918962576451);
constexpr double kGaussB = 0.5 * (1.0 + 0.57735026918962576451);

double sample_multiplication(const MultiplicationOp& op, const TriangleMesh& mesh,
                             const BoundaryTraversal::QuadPoint& qp) {
  if (op.theta) return op.theta(qp.s);
  return op.side_values.at(static_cast<size_t>(mesh.boundary_edges[qp.edge].side));
}

void validate_multiplication(const MultiplicationOp& op, const TriangleMesh& mesh) {
  const bool has_sides = !op.side_values.empty();
  const bool has_theta = static_cast<bool>(op.theta);
  if (has_sides == has_theta) {
    throw std::invalid_argument(
        "boundary_ops: multiplication weight needs exactly one representation");
  }
  if (has_sides) {
    for (const auto& e : mesh.boundary_edges) {
      if (e.side < 0 || e.side >= static_cast<int>(op.side_values.size())) {
        throw std::invalid_argument(
            "boundary_ops: side value list does not cover every polygon side");
      }
    }
  }
}

// Hat-weighted boundary moments of a profile: v_i = \int g phi_i ds.
Eigen::VectorXd boundary_moments(const TriangleMesh& mesh, const BoundaryTraversal& traversal,
                                 const std::function<double(double)>& g) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (size_t k = 0; k < traversal.edge_order.size(); ++k) {
    const auto& e = mesh.boundary_edges[traversal.edge_order[k]];
    for (int q = 0; q < 2; ++q) {
      const auto& qp = traversal.quadrature[2 * k + q];
      const double gv = g(qp.s);
      if (!std::isfinite(gv)) {
        throw std::runtime_error("boundary_ops: profile is not finite at a quadrature point");
      }
      const double t = (q == 0) ? kGaussA : kGaussB;
      v[e.a] += qp.w * gv * (1.0 - t);
      v[e.b] += qp.w * gv * t;
    }
  }
  return v;
}

std::vector<std::string> split_top_level(const std::string& body) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : body) {
    if (c == ';') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> split_colon(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ':') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double to_number(const std::string& s) {
  size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

OperatorPart parse_single(const std::string& text) {
  const auto f = split_colon(text);
  OperatorPart part;
  try {
    if (f[0] == "zero" && f.size() == 1) {
      part.op = ZeroOp{};
      return part;
    }
    if (f[0] == "mult" && f.size() >= 2) {
      MultiplicationOp op;
      if (f[1] == "const" && f.size() == 3) {
        const double v = to_number(f[2]);
        op.theta = [v](double) { return v; };
        part.op = std::move(op);
        return part;
      }
      if (f[1] == "edges" && f.size() == 3) {
        std::string item;
        for (char c : f[2] + ",") {
          if (c == ',') {
            op.side_values.push_back(to_number(item));
            item.clear();
          } else {
            item.push_back(c);
          }
        }
        if (op.side_values.empty()) throw std::invalid_argument("empty edge list");
        part.op = std::move(op);
        return part;
      }
    }
    if (f[0] == "rank1" && f.size() == 3 && f[1] == "const") {
      RankOneOp op;
      op.g = [](double) { return 1.0; };
      op.coefficient = to_number(f[2]);
      part.op = std::move(op);
      return part;
    }
    if (f[0] == "kernel" && f.size() == 4 && f[1] == "cosine") {
      const double a = to_number(f[2]);
      const double m = to_number(f[3]);
      KernelOp op;
      op.k = [a, m](double s, double t, double perimeter) {
        return a * std::cos(2.0 * M_PI * m * (s - t) / perimeter);
      };
      part.op = std::move(op);
      return part;
    }
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("boundary_ops: bad number in spec '" + text + "'");
  }
  throw std::invalid_argument("boundary_ops: unknown operator spec '" + text + "'");
}

}  // namespace

bool BoundaryOperatorSpec::is_zero() const {
  for (const auto& p : parts) {
    if (!std::holds_alternative<ZeroOp>(p.op)) return false;
  }
  return true;
}

BoundaryOperatorSpec parse_boundary_spec(const std::string& text) {
  BoundaryOperatorSpec spec;
  spec.text = text;
  if (text.rfind("sum:(", 0) == 0 && text.back() == ')') {
    const std::string body = text.substr(5, text.size() - 6);
    for (const auto& item : split_top_level(body)) {
      if (item.rfind("sum:", 0) == 0) {
        throw std::invalid_argument("boundary_ops: composites do not nest");
      }
      spec.parts.push_back(parse_single(item));
    }
    if (spec.parts.empty()) throw std::invalid_argument("boundary_ops: empty composite spec");
    return spec;
  }
  spec.parts.push_back(parse_single(text));
  if (text == "zero") spec.sign_claim = SignClaim::nonpositive;
  return spec;
}

DiscreteForm theta_matrix(const TriangleMesh& mesh, const BoundaryTraversal& traversal,
                          const BoundaryOperatorSpec& spec) {
  const int n = mesh.num_nodes();
  Eigen::SparseMatrix<double> acc(n, n);
  const double perimeter = traversal.total_arclength;

  for (const auto& part : spec.parts) {
    if (std::holds_alternative<ZeroOp>(part.op)) continue;
    if (const auto* mult = std::get_if<MultiplicationOp>(&part.op)) {
      validate_multiplication(*mult, mesh);
      if (!(mult->lp_exponent > 1.0)) {
        throw std::invalid_argument(
            "boundary_ops: trace pairing unverifiable; integrability exponent must exceed 1");
      }
      DiscreteForm f =
          mult->theta ? assemble_boundary_weighted(mesh, traversal, mult->theta)
                      : assemble_boundary_weighted(mesh, traversal, mult->side_values);
      acc += f.matrix;
      continue;
    }
    if (const auto* ker = std::get_if<KernelOp>(&part.op)) {
      if (!ker->k) throw std::invalid_argument("boundary_ops: null kernel");
      DiscreteForm f = assemble_nonlocal(
          mesh, traversal,
          [&](double s, double t) { return ker->k(s, t, perimeter); });
      acc += f.matrix;
      continue;
    }
    const auto& r1 = std::get<RankOneOp>(part.op);
    if (!r1.g) throw std::invalid_argument("boundary_ops: null rank-one profile");
    const Eigen::VectorXd v = boundary_moments(mesh, traversal, r1.g);
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < n; ++i) {
      if (v[i] == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        if (v[j] == 0.0) continue;
        trips.emplace_back(i, j, r1.coefficient * v[i] * v[j]);
      }
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    acc += m;
  }

  DiscreteForm out;
  out.kind = spec.parts.size() == 1 ? FormKind::boundary : FormKind::composite;
  out.matrix = acc.pruned();
  out.matrix.makeCompressed();
  return out;
}

double plane_wave_form(const TriangleMesh& mesh, const BoundaryTraversal& traversal,
                       const BoundaryOperatorSpec& spec, const Eigen::Vector2d& eta) {
  using Complex = std::complex<double>;
  const int nq = static_cast<int>(traversal.quadrature.size());
  const double perimeter = traversal.total_arclength;

  std::vector<Complex> wave(nq);
  for (int q = 0; q < nq; ++q) {
    const double phase = traversal.quadrature[q].x.dot(eta);
    wave[q] = Complex(std::cos(phase), std::sin(phase));
  }

  Complex total(0.0, 0.0);
  double gross = 0.0;

  for (const auto& part : spec.parts) {
    if (std::holds_alternative<ZeroOp>(part.op)) continue;
    if (const auto* mult = std::get_if<MultiplicationOp>(&part.op)) {
      validate_multiplication(*mult, mesh);
      for (int q = 0; q < nq; ++q) {
        const auto& qp = traversal.quadrature[q];
        const double th = sample_multiplication(*mult, mesh, qp);
        const Complex term = qp.w * th * std::conj(wave[q]) * wave[q];
        total += term;
        gross += std::abs(term);
      }
      continue;
    }
    if (const auto* ker = std::get_if<KernelOp>(&part.op)) {
      for (int q = 0; q < nq; ++q) {
        const auto& qp = traversal.quadrature[q];
        for (int r = 0; r < nq; ++r) {
          const auto& qr = traversal.quadrature[r];
          const Complex term = qp.w * qr.w * ker->k(qp.s, qr.s, perimeter) *
                               std::conj(wave[q]) * wave[r];
          total += term;
          gross += std::abs(term);
        }
      }
      continue;
    }
    const auto& r1 = std::get<RankOneOp>(part.op);
    Complex overlap(0.0, 0.0);
    double overlap_gross = 0.0;
    for (int q = 0; q < nq; ++q) {
      const auto& qp = traversal.quadrature[q];
      const double gv = r1.g(qp.s);
      overlap += qp.w * gv * wave[q];
      overlap_gross += std::abs(qp.w * gv);
    }
    total += r1.coefficient * std::norm(overlap);
    gross += std::abs(r1.coefficient) * overlap_gross * overlap_gross;
  }

  const double tol = 1e-10 * std::max({std::abs(total.real()), gross, 1e-300});
  if (std::abs(total.imag()) > tol) {
    throw std::runtime_error(
        "boundary_ops: sesquilinear form has a nonvanishing imaginary part; spec is not self-adjoint");
  }
  return total.real();
}

NonpositivityVerdict check_nonpositive(const DiscreteForm& theta_form, double tol) {
  std::vector<int> support;
  for (int k = 0; k < theta_form.matrix.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(theta_form.matrix, k); it; ++it) {
      if (it.value() != 0.0) {
        support.push_back(static_cast<int>(it.row()));
        support.push_back(static_cast<int>(it.col()));
      }
    }
  }
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());

  NonpositivityVerdict v;
  if (support.empty()) {
    v.nonpositive = true;
    return v;
  }
  const int m = static_cast<int>(support.size());
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(m, m);
  std::vector<int> where(theta_form.dim(), -1);
  for (int i = 0; i < m; ++i) where[support[i]] = i;
  for (int k = 0; k < theta_form.matrix.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(theta_form.matrix, k); it; ++it) {
      block(where[it.row()], where[it.col()]) = it.value();
    }
  }
  v.scale = block.cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("boundary_ops: boundary block eigendecomposition failed");
  }
  v.witness = es.eigenvalues().maxCoeff();
  v.nonpositive = v.witness <= tol * std::max(v.scale, 1e-300);
  return v;
}

double lp_norm(const MultiplicationOp& op, double p, const TriangleMesh& mesh,
               const BoundaryTraversal& traversal) {
  if (!(p > 1.0)) {
    throw std::invalid_argument("boundary_ops: Lp norm needs an exponent above 1");
  }
  validate_multiplication(op, mesh);
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& qp : traversal.quadrature) {
      m = std::max(m, std::abs(sample_multiplication(op, mesh, qp)));
    }
    return m;
  }
  double acc = 0.0;
  for (const auto& qp : traversal.quadrature) {
    acc += qp.w * std::pow(std::abs(sample_multiplication(op, mesh, qp)), p);
  }
  return std::pow(acc, 1.0 / p);
}

namespace {

// Trace-space proxy norm matrix N = T + (T L T)^{1/2} on boundary nodes.
Eigen::MatrixXd proxy_norm_matrix(const TriangleMesh& mesh, const BoundaryTraversal& traversal,
                                  const std::vector<int>& bnodes) {
  const int m = static_cast<int>(bnodes.size());
  std::vector<int> where(mesh.num_nodes(), -1);
  for (int i = 0; i < m; ++i) where[bnodes[i]] = i;

  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
  for (size_t k = 0; k < traversal.edge_order.size(); ++k) {
    const auto& e = mesh.boundary_edges[traversal.edge_order[k]];
    const double len = mesh.edge_length(traversal.edge_order[k]);
    const int i = where[e.a];
    const int j = where[e.b];
    t(i, i) += len / 3.0;
    t(j, j) += len / 3.0;
    t(i, j) += len / 6.0;
    t(j, i) += len / 6.0;
    l(i, i) += 1.0 / len;
    l(j, j) += 1.0 / len;
    l(i, j) -= 1.0 / len;
    l(j, i) -= 1.0 / len;
  }
  const Eigen::MatrixXd s = t * l * t;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("boundary_ops: proxy norm eigendecomposition failed");
  }
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return t + es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double proxy_operator_norm(const TriangleMesh& mesh, const BoundaryTraversal& traversal,
                           const OperatorPart& part) {
  BoundaryOperatorSpec one;
  one.parts.push_back(part);
  const DiscreteForm f = theta_matrix(mesh, traversal, one);

  std::vector<int> bnodes;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (mesh.on_boundary[i]) bnodes.push_back(i);
  }
  const int m = static_cast<int>(bnodes.size());
  std::vector<int> where(mesh.num_nodes(), -1);
  for (int i = 0; i < m; ++i) where[bnodes[i]] = i;
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < f.matrix.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(f.matrix, k); it; ++it) {
      const int i = where[it.row()];
      const int j = where[it.col()];
      if (i >= 0 && j >= 0) block(i, j) = it.value();
    }
  }
  const Eigen::MatrixXd n = proxy_norm_matrix(mesh, traversal, bnodes);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(block, n,
                                                               Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("boundary_ops: proxy norm pencil failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

AdmissibilityVerdict classify(const BoundaryOperatorSpec& spec, const TriangleMesh& mesh,
                              const BoundaryTraversal& traversal, double delta) {
  AdmissibilityVerdict verdict;
  verdict.delta = delta;
  verdict.pass = true;
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> uni(0.0, traversal.total_arclength);

  for (const auto& part : spec.parts) {
    PartVerdict pv;
    pv.role = part.role;

    if (std::holds_alternative<ZeroOp>(part.op)) {
      pv.description = "zero";
      pv.pass = true;
      pv.reason = "trivial";
    } else if (const auto* mult = std::get_if<MultiplicationOp>(&part.op)) {
      pv.description = "multiplication";
      if (!(mult->lp_exponent > 1.0)) {
        pv.pass = false;
        pv.reason = "unverifiable pairing: integrability exponent must exceed 1";
      } else {
        bool finite = true;
        try {
          pv.metric = lp_norm(*mult, mult->lp_exponent, mesh, traversal);
          finite = std::isfinite(pv.metric);
        } catch (const std::exception&) {
          finite = false;
        }
        pv.pass = finite;
        pv.reason = finite ? "weight integrable; factors through boundary L2"
                           : "weight not finite on quadrature samples";
      }
    } else if (const auto* ker = std::get_if<KernelOp>(&part.op)) {
      pv.description = "kernel";
      const double perimeter = traversal.total_arclength;
      double asym = 0.0;
      double scale = 0.0;
      for (int i = 0; i < 64; ++i) {
        const double s = uni(rng);
        const double t = uni(rng);
        const double kst = ker->k(s, t, perimeter);
        const double kts = ker->k(t, s, perimeter);
        asym = std::max(asym, std::abs(kst - kts));
        scale = std::max({scale, std::abs(kst), std::abs(kts)});
      }
      if (asym > 1e-10 * std::max(scale, 1e-300)) {
        pv.pass = false;
        pv.reason = "kernel is not symmetric";
      } else {
        double sq = 0.0;
        for (const auto& qp : traversal.quadrature) {
          for (const auto& qr : traversal.quadrature) {
            const double kv = ker->k(qp.s, qr.s, perimeter);
            sq += qp.w * qr.w * kv * kv;
          }
        }
        pv.metric = std::sqrt(sq);
        pv.pass = true;
        pv.reason = "square-integrable kernel; factors through boundary L2";
      }
    } else {
      const auto& r1 = std::get<RankOneOp>(part.op);
      pv.description = "rank-one";
      double sq = 0.0;
      for (const auto& qp : traversal.quadrature) {
        const double gv = r1.g(qp.s);
        sq += qp.w * gv * gv;
      }
      pv.metric = std::abs(r1.coefficient) * sq;
      pv.pass = true;
      pv.reason = "finite-rank; factors through boundary L2";
    }

    if (pv.pass && part.role == PartRole::small_norm) {
      const double proxy = proxy_operator_norm(mesh, traversal, part);
      pv.metric = proxy;
      pv.pass = proxy < delta;
      pv.reason = pv.pass ? "proxy norm within the smallness budget"
                          : "proxy norm exceeds the smallness budget";
    }
    if (pv.pass && part.role == PartRole::semibounded) {
      // Any discretized part is bounded below; record the bound as the
      // smallest eigenvalue of its boundary block.
      BoundaryOperatorSpec one;
      one.parts.push_back(part);
      DiscreteForm f = theta_matrix(mesh, traversal, one);
      f.matrix = (-f.matrix).eval();
      const NonpositivityVerdict np = check_nonpositive(f, 1e30);
      pv.metric = -np.witness;
      pv.reason = "discrete form bounded below";
    }

    verdict.pass = verdict.pass && pv.pass;
    verdict.parts.push_back(std::move(pv));
  }
  return verdict;
}

}  // namespace robinlab
