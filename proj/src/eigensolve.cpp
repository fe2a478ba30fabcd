// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#include "robinlab/eigensolve.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace robinlab {

namespace {

double matrix_scale(const Eigen::SparseMatrix<double>& m) {
  double s = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
      s = std::max(s, std::abs(it.value()));
    }
  }
  return s;
}

// The residual |Kx - lambda Mx| in the M^{-1} norm cannot be evaluated below
// the roundoff of the products themselves, which grows like the pencil's top
// eigenvalue. The absolute tolerance is floored there so exactly-degenerate
// modes (the free constant at lambda = 0) stay certifiable on fine meshes.
double residual_floor(const Eigen::SparseMatrix<double>& k, const Eigen::SparseMatrix<double>& m) {
  const double md = m.diagonal().minCoeff();
  if (!(md > 0.0)) return 0.0;
  return 100.0 * std::numeric_limits<double>::epsilon() * matrix_scale(k) / md;
}

// Signs of the block diagonal of a Bunch-Kaufman factorization.
struct DenseInertia {
  int negative = 0;
  int zero = 0;
};

DenseInertia dense_inertia(Eigen::MatrixXd c, double zero_tol) {
  const int n = static_cast<int>(c.rows());
  std::vector<lapack_int> ipiv(std::max(1, n));
  const lapack_int info =
      LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, c.data(), n, ipiv.data());
  if (info < 0) throw std::runtime_error("eigensolve: symmetric factorization failed");
  DenseInertia res;
  int k = 0;
  while (k < n) {
    if (ipiv[k] > 0) {
      const double d = c(k, k);
      if (std::abs(d) <= zero_tol) {
        res.zero += 1;
      } else if (d < 0.0) {
        res.negative += 1;
      }
      k += 1;
    } else {
      const double a = c(k, k);
      const double b = c(k + 1, k);
      const double d = c(k + 1, k + 1);
      const double det = a * d - b * b;
      if (std::abs(det) <= zero_tol * zero_tol) {
        res.zero += 1;
        res.negative += (a + d < 0.0) ? 1 : 0;
      } else if (det < 0.0) {
        res.negative += 1;
      } else if (a + d < 0.0) {
        res.negative += 2;
      }
      k += 2;
    }
  }
  return res;
}

struct SparseInertia {
  int negative = 0;
  bool clean = true;  // no pivot within the zero tolerance
};

SparseInertia sparse_inertia(const Eigen::SparseMatrix<double>& c, double zero_tol) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(c);
  SparseInertia res;
  if (ldlt.info() != Eigen::Success) {
    res.clean = false;
    return res;
  }
  const Eigen::VectorXd d = ldlt.vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i]) || std::abs(d[i]) <= zero_tol) {
      res.clean = false;
      return res;
    }
    if (d[i] < 0.0) res.negative += 1;
  }
  return res;
}

using SparseLDLT = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;

double m_norm(const Eigen::SparseMatrix<double>& m, const Eigen::VectorXd& v) {
  return std::sqrt(std::max(0.0, v.dot(m * v)));
}

// One Krylov sweep of (K - sigma M)^{-1} M in the M inner product, deflating
// against already accepted vectors. Returns Ritz pairs of the original
// pencil, ascending.
struct RitzPair {
  double value = 0.0;
  Eigen::VectorXd vector;
};

std::vector<RitzPair> krylov_sweep(const Eigen::SparseMatrix<double>& k,
                                   const Eigen::SparseMatrix<double>& m,
                                   const SparseLDLT& shifted, double sigma,
                                   const Eigen::MatrixXd& locked, int steps,
                                   std::mt19937_64& rng) {
  const Eigen::Index n = k.rows();
  steps = static_cast<int>(std::min<Eigen::Index>(steps, n - locked.cols()));
  if (steps <= 0) return {};

  Eigen::MatrixXd v(n, steps);
  std::vector<double> alpha;
  std::vector<double> beta;  // beta[j] couples v_j and v_{j+1}

  auto project_out = [&](Eigen::VectorXd& w, int cols) {
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd mw = m * w;
      if (locked.cols() > 0) w -= locked * (locked.transpose() * mw).eval();
      if (cols > 0) {
        w -= v.leftCols(cols) * (v.leftCols(cols).transpose() * (m * w)).eval();
      }
    }
  };

  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = uni(rng);
  project_out(w, 0);
  double nrm = m_norm(m, w);
  if (nrm <= 0.0) return {};
  v.col(0) = w / nrm;

  int built = 0;
  for (int j = 0; j < steps; ++j) {
    built = j + 1;
    w = shifted.solve(m * v.col(j));
    const double aj = v.col(j).dot(m * w);
    alpha.push_back(aj);
    w -= aj * v.col(j);
    if (j > 0) w -= beta[j - 1] * v.col(j - 1);
    project_out(w, j + 1);
    const double bj = m_norm(m, w);
    if (j + 1 == steps) break;
    if (!(bj > 1e-13)) break;  // invariant subspace for this start vector
    beta.push_back(bj);
    v.col(j + 1) = w / bj;
  }

  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(built, built);
  for (int i = 0; i < built; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < built) {
      t(i + 1, i) = beta[i];
      t(i, i + 1) = beta[i];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigensolve: tridiagonal reduction failed");
  }

  std::vector<RitzPair> out;
  // Largest theta of the transformed operator maps to the eigenvalue nearest
  // (and above) sigma.
  for (int i = built - 1; i >= 0; --i) {
    const double theta = es.eigenvalues()[i];
    if (!(theta > 0.0)) break;  // beyond this the map back is unreliable
    RitzPair p;
    p.value = sigma + 1.0 / theta;
    p.vector = v.leftCols(built) * es.eigenvectors().col(i);
    out.push_back(std::move(p));
  }
  return out;
}

Spectrum solve_dense(const DiscreteForm& a, const DiscreteForm& m, int count,
                     const SolveOptions& opt) {
  const Eigen::MatrixXd ad = Eigen::MatrixXd(a.matrix);
  const Eigen::MatrixXd md = Eigen::MatrixXd(m.matrix);
  const int decomposition =
      opt.want_vectors ? (Eigen::ComputeEigenvectors | Eigen::Ax_lBx)
                       : (Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(ad, md, decomposition);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigensolve: dense reduction failed; mass matrix must be positive definite");
  }
  Spectrum s;
  s.total_dim = a.dim();
  s.used_krylov = false;
  s.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + count);
  if (opt.want_vectors) s.vectors = es.eigenvectors().leftCols(count);
  return s;
}

Spectrum solve_krylov(const DiscreteForm& a, const DiscreteForm& m, int count,
                      const SolveOptions& opt) {
  const Eigen::SparseMatrix<double>& k = a.matrix;
  const Eigen::SparseMatrix<double>& mm = m.matrix;
  const Eigen::Index n = k.rows();

  SparseLDLT mass_factor(mm);
  if (mass_factor.info() != Eigen::Success) {
    throw std::runtime_error("eigensolve: mass matrix factorization failed");
  }
  auto residual_norm = [&](const Eigen::VectorXd& x, double lambda) {
    const Eigen::VectorXd r = k * x - lambda * (mm * x);
    return std::sqrt(std::max(0.0, r.dot(mass_factor.solve(r))));
  };

  // Place the shift strictly below the spectrum: walk downward until the
  // shifted matrix is positive definite.
  const double rough = std::max(1.0, matrix_scale(k) / std::max(matrix_scale(mm), 1e-300));
  double sigma = -1e-6 * rough;
  SparseLDLT shifted;
  bool placed = false;
  for (int attempt = 0; attempt < 80; ++attempt) {
    const Eigen::SparseMatrix<double> c = (k - sigma * mm).pruned();
    shifted.compute(c);
    bool pd = shifted.info() == Eigen::Success;
    if (pd) {
      const Eigen::VectorXd d = shifted.vectorD();
      for (Eigen::Index i = 0; i < d.size() && pd; ++i) {
        pd = std::isfinite(d[i]) && d[i] > 0.0;
      }
    }
    if (pd) {
      placed = true;
      break;
    }
    sigma = 8.0 * sigma - 1e-6 * rough;
  }
  if (!placed) throw std::runtime_error("eigensolve: could not bracket the spectrum from below");

  std::mt19937_64 rng(opt.seed);
  std::vector<double> values;
  Eigen::MatrixXd locked(n, 0);
  int target = count;
  int sweeps = 0;

  auto try_lock = [&](RitzPair& p) {
    Eigen::VectorXd x = p.vector;
    for (int pass = 0; pass < 2 && locked.cols() > 0; ++pass) {
      x -= locked * (locked.transpose() * (mm * x)).eval();
    }
    double nrm = m_norm(mm, x);
    if (nrm < 1e-8) return false;  // direction already captured
    x /= nrm;
    double lambda = x.dot(k * x);
    // One extra shift-invert application sharpens the pair before the
    // residual gate.
    Eigen::VectorXd y = shifted.solve(mm * x);
    for (int pass = 0; pass < 2 && locked.cols() > 0; ++pass) {
      y -= locked * (locked.transpose() * (mm * y)).eval();
    }
    const double ny = m_norm(mm, y);
    if (ny > 1e-300) {
      y /= ny;
      const double ly = y.dot(k * y);
      if (residual_norm(y, ly) < residual_norm(x, lambda)) {
        x = y;
        lambda = ly;
      }
    }
    if (residual_norm(x, lambda) >
        opt.residual_rtol * std::abs(lambda) + std::max(opt.residual_atol, residual_floor(k, mm))) {
      return false;
    }
    locked.conservativeResize(Eigen::NoChange, locked.cols() + 1);
    locked.col(locked.cols() - 1) = x;
    values.push_back(lambda);
    return true;
  };

  while (true) {
    while (static_cast<int>(values.size()) < target) {
      if (sweeps > opt.max_restarts) {
        throw std::runtime_error("eigensolve: Krylov iteration did not converge");
      }
      const int steps = std::max(2 * target + 40, 60) + 20 * sweeps;
      std::vector<RitzPair> ritz =
          krylov_sweep(k, mm, shifted, sigma, locked, steps, rng);
      ++sweeps;
      std::sort(ritz.begin(), ritz.end(),
                [](const RitzPair& l, const RitzPair& r) { return l.value < r.value; });
      for (auto& p : ritz) {
        if (static_cast<int>(values.size()) >= target) break;
        try_lock(p);
      }
    }

    // Inertia audit just above the last accepted value: any eigenvalue the
    // iteration skipped shows up as a surplus and widens the target window.
    std::vector<int> order(values.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int l, int r) { return values[l] < values[r]; });
    const double top = values[order[target - 1]];
    const double probe = top + 1e-8 * std::max(1.0, std::abs(top)) + 1e-12;
    const InertiaResult audit = inertia_count(a, m, probe, 0);
    int below = 0;
    for (double vv : values) {
      if (vv < probe) ++below;
    }
    if (audit.below > below && sweeps <= opt.max_restarts + 4) {
      target = std::max(target, audit.below);
      continue;
    }

    Spectrum s;
    s.total_dim = static_cast<int>(n);
    s.used_krylov = true;
    s.eigenvalues.resize(count);
    if (opt.want_vectors) s.vectors.resize(n, count);
    for (int i = 0; i < count; ++i) {
      s.eigenvalues[i] = values[order[i]];
      if (opt.want_vectors) s.vectors.col(i) = locked.col(order[i]);
    }
    return s;
  }
}

}  // namespace

std::vector<Spectrum::Cluster> Spectrum::clusters(double merge_rtol) const {
  std::vector<Cluster> out;
  for (size_t i = 0; i < eigenvalues.size(); ++i) {
    const double v = eigenvalues[i];
    if (!out.empty()) {
      Cluster& c = out.back();
      const double prev = eigenvalues[i - 1];
      const double gap = std::abs(v - prev);
      const double scale = std::max(std::abs(v), std::abs(prev));
      if (gap <= merge_rtol * scale + 1e-12) {
        c.value = (c.value * c.multiplicity + v) / (c.multiplicity + 1);
        c.multiplicity += 1;
        continue;
      }
    }
    Cluster c;
    c.value = v;
    c.first_index = static_cast<int>(i);
    c.multiplicity = 1;
    out.push_back(c);
  }
  return out;
}

Spectrum solve(const DiscreteForm& stiffness, const DiscreteForm& mass, int count,
               const SolveOptions& options) {
  const int n = stiffness.dim();
  if (mass.dim() != n) throw std::invalid_argument("eigensolve: pencil dimension mismatch");
  if (count < 1 || count > n) {
    throw std::invalid_argument("eigensolve: eigenvalue count out of range");
  }
  Spectrum s = (n <= options.dense_threshold) ? solve_dense(stiffness, mass, count, options)
                                              : solve_krylov(stiffness, mass, count, options);
  // The residual gate below is part of the contract for both paths.
  if (options.want_vectors) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> mf(mass.matrix);
    const double atol = std::max(options.residual_atol, residual_floor(stiffness.matrix, mass.matrix));
    for (int i = 0; i < count; ++i) {
      const Eigen::VectorXd x = s.vectors.col(i);
      const double lambda = s.eigenvalues[i];
      const Eigen::VectorXd r = stiffness.matrix * x - lambda * (mass.matrix * x);
      const double rho = std::sqrt(std::max(0.0, r.dot(mf.solve(r))));
      if (rho > options.residual_rtol * std::abs(lambda) + atol) {
        throw std::runtime_error("eigensolve: residual tolerance not met");
      }
    }
  }
  return s;
}

int counting_function(const Spectrum& spectrum, double lambda) {
  if (spectrum.eigenvalues.empty()) {
    throw std::invalid_argument("eigensolve: counting over an empty spectrum");
  }
  const double top = spectrum.eigenvalues.back();
  const bool complete =
      static_cast<int>(spectrum.eigenvalues.size()) == spectrum.total_dim;
  if (lambda > top && !complete) {
    throw std::domain_error("eigensolve: counting threshold beyond the computed window");
  }
  const auto it = std::upper_bound(spectrum.eigenvalues.begin(), spectrum.eigenvalues.end(), lambda);
  return static_cast<int>(it - spectrum.eigenvalues.begin());
}

InertiaResult inertia_count(const DiscreteForm& stiffness, const DiscreteForm& mass,
                            double lambda, int dense_threshold) {
  const int n = stiffness.dim();
  if (mass.dim() != n) throw std::invalid_argument("eigensolve: pencil dimension mismatch");

  InertiaResult res;
  double shift = lambda;
  const double scale = std::max(std::abs(lambda), 1.0);
  for (int attempt = 0; attempt < 4; ++attempt) {
    const Eigen::SparseMatrix<double> c =
        (stiffness.matrix - shift * mass.matrix).pruned();
    const double ztol = 1e-14 * std::max(matrix_scale(c), 1e-300);
    if (n <= dense_threshold) {
      const DenseInertia di = dense_inertia(Eigen::MatrixXd(c), ztol);
      if (di.zero == 0) {
        res.below = di.negative;
        res.lambda_used = shift;
        res.perturbed = attempt > 0;
        return res;
      }
    } else {
      const SparseInertia si = sparse_inertia(c, ztol);
      if (si.clean) {
        res.below = si.negative;
        res.lambda_used = shift;
        res.perturbed = attempt > 0;
        return res;
      }
    }
    shift = shift + std::pow(10.0, attempt) * 1e-8 * scale;
  }
  throw std::runtime_error("eigensolve: inertia factorization kept hitting a singular shift");
}

namespace {

ExtrapolatedSpectrum richardson_impl(const Spectrum* coarse, const Spectrum& mid,
                                     const Spectrum& fine) {
  const size_t n = std::min(mid.eigenvalues.size(), fine.eigenvalues.size());
  if (mid.eigenvalues.size() != fine.eigenvalues.size() ||
      (coarse && coarse->eigenvalues.size() != n)) {
    throw std::invalid_argument("eigensolve: extrapolation needs matching index ranges");
  }
  if (n == 0) throw std::invalid_argument("eigensolve: extrapolation over empty spectra");

  ExtrapolatedSpectrum out;
  out.values.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double vm = mid.eigenvalues[i];
    const double vf = fine.eigenvalues[i];
    const double d2 = vf - vm;
    ExtrapolatedValue& e = out.values[i];
    if (!coarse) {
      e.value = vf + d2 / 3.0;
      e.error = 2.0 * std::abs(e.value - vf);
      e.order = std::numeric_limits<double>::quiet_NaN();
      e.extrapolated = true;
      continue;
    }
    const double d1 = vm - coarse->eigenvalues[i];
    const double scale = std::max({std::abs(vf), std::abs(vm), 1e-300});
    if (std::abs(d2) <= 1e-14 * scale) {
      e.value = vf;
      e.error = std::abs(d2);
      e.order = std::abs(d1) <= 1e-14 * scale ? std::numeric_limits<double>::infinity()
                                              : std::numeric_limits<double>::infinity();
      e.extrapolated = true;
      continue;
    }
    e.order = std::log2(std::abs(d1) / std::abs(d2));
    if (e.order < 1.5) {
      // Below-order data (corner singularities, preasymptotic meshes): report
      // the finest value with the last gap as the bar instead of extrapolating.
      e.value = vf;
      e.error = std::abs(d2);
      e.extrapolated = false;
    } else {
      e.value = vf + d2 / 3.0;
      e.error = 2.0 * std::abs(e.value - vf);
      e.extrapolated = true;
    }
  }
  return out;
}

}  // namespace

ExtrapolatedSpectrum richardson(const Spectrum& coarse, const Spectrum& fine) {
  return richardson_impl(nullptr, coarse, fine);
}

ExtrapolatedSpectrum richardson(const Spectrum& coarse, const Spectrum& mid,
                                const Spectrum& fine) {
  return richardson_impl(&coarse, mid, fine);
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum,
                        const std::vector<double>* errors, double merge_rtol) {
  if (errors && errors->size() != spectrum.eigenvalues.size()) {
    throw std::invalid_argument("eigensolve: error column length mismatch");
  }
  out << "index,eigenvalue,multiplicity,error_estimate\n";
  char buf[128];
  for (const auto& c : spectrum.clusters(merge_rtol)) {
    double err = 0.0;
    if (errors) {
      for (int k = 0; k < c.multiplicity; ++k) {
        err = std::max(err, (*errors)[c.first_index + k]);
      }
    }
    std::snprintf(buf, sizeof buf, "%d,%.17g,%d,%.17g\n", c.first_index + 1, c.value,
                  c.multiplicity, err);
    out << buf;
  }
}

}  // namespace robinlab
