// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#include "robinlab/harness.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>

namespace robinlab {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;

std::uint64_t fnv1a(const std::string& text, std::uint64_t h) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Stable per-task stream seed: the base seed and a textual tag are hashed
// together so distinct tasks never share a generator state.
std::uint64_t mix_seed(std::uint64_t seed, const std::string& tag) {
  std::uint64_t h = fnv1a(tag, 1469598103934665603ull ^ seed);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ull;
  h ^= h >> 33;
  return h;
}

int severity(Verdict v) {
  switch (v) {
    case Verdict::holds_strict: return 0;
    case Verdict::holds_weak: return 1;
    case Verdict::inconclusive: return 2;
    case Verdict::violated: return 3;
  }
  return 3;
}

// lhs < rhs with separated error bars is strict; reversed separation is a
// violation; overlapping bars fall back to the central values.
std::pair<Verdict, double> compare_below(const ValueWithError& lhs, const ValueWithError& rhs) {
  const double margin = (rhs.value - rhs.error) - (lhs.value + lhs.error);
  if (margin > 0.0) return {Verdict::holds_strict, margin};
  if (lhs.value - lhs.error > rhs.value + rhs.error) return {Verdict::violated, margin};
  if (lhs.value <= rhs.value) return {Verdict::holds_weak, margin};
  return {Verdict::inconclusive, margin};
}

void validate_levels(const std::vector<int>& levels) {
  if (levels.size() != 2 && levels.size() != 3) {
    throw std::invalid_argument("extrapolation needs two or three refinement levels");
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0) throw std::invalid_argument("refinement level must be nonnegative");
    if (i > 0 && levels[i] != levels[i - 1] + 1) {
      throw std::invalid_argument("refinement levels must be consecutive");
    }
  }
}

struct LevelData {
  TriangleMesh mesh;
  BoundaryTraversal traversal;
  DiscreteForm stiffness;
  DiscreteForm mass;
  DiscreteForm theta;
  DiscreteForm robin;  // stiffness + boundary operator
  DirichletReduction reduction;
};

LevelData build_level(const PolygonalDomain& domain, const BoundaryOperatorSpec& spec,
                      int level) {
  LevelData d;
  d.mesh = mesh_at_level(domain, level);
  d.traversal = boundary_traversal(d.mesh);
  d.stiffness = assemble_stiffness(d.mesh);
  d.mass = assemble_mass(d.mesh);
  d.theta = theta_matrix(d.mesh, d.traversal, spec);
  d.robin.matrix = d.stiffness.matrix + d.theta.matrix;
  d.robin.kind = FormKind::composite;
  d.reduction = reduce_dirichlet(d.stiffness, d.mass, d.mesh);
  return d;
}

ExtrapolatedSpectrum extrapolate(const std::vector<Spectrum>& per_level) {
  if (per_level.size() == 2) return richardson(per_level[0], per_level[1]);
  return richardson(per_level[0], per_level[1], per_level[2]);
}

ValueWithError as_value(const ExtrapolatedValue& v) { return {v.value, v.error}; }

std::string level_tag(int level) { return "level " + std::to_string(level); }

ordered_json json_vec2(const Eigen::Vector2d& v) { return ordered_json{v.x(), v.y()}; }

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds_strict: return "holds_strict";
    case Verdict::holds_weak: return "holds_weak";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::violated: return "violated";
  }
  return "violated";
}

InequalityReport verify_interlacing(const PolygonalDomain& domain,
                                    const BoundaryOperatorSpec& spec, int J,
                                    const HarnessOptions& opts) {
  if (J < 1) throw std::invalid_argument("need at least one eigenvalue index");
  validate_levels(opts.levels);

  SolveOptions sopt = opts.solver;
  sopt.want_vectors = false;
  sopt.seed = mix_seed(opts.seed, "solve|" + domain.name + "|" + spec.text);

  std::vector<LevelData> data;
  data.reserve(opts.levels.size());
  for (int level : opts.levels) data.push_back(build_level(domain, spec, level));

  std::vector<Spectrum> neumann_levels, dirichlet_levels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Spectrum nm = solve(data[i].stiffness, data[i].mass, J + 1, sopt);
    nm.problem = "natural, " + level_tag(opts.levels[i]);
    Spectrum dr = solve(data[i].reduction.stiffness, data[i].reduction.mass, J + 5, sopt);
    dr.problem = "essential, " + level_tag(opts.levels[i]);
    neumann_levels.push_back(std::move(nm));
    dirichlet_levels.push_back(std::move(dr));
  }
  const ExtrapolatedSpectrum neumann_x = extrapolate(neumann_levels);
  const ExtrapolatedSpectrum dirichlet_x = extrapolate(dirichlet_levels);
  const ValueWithError top_target = as_value(dirichlet_x.values[J - 1]);

  // One boundary-operator window serves both the rows and the counting
  // table; widen it until its top clears the largest threshold.
  int count = 2 * J + 8;
  int full_dim = data.front().mass.dim();
  for (const LevelData& d : data) full_dim = std::min(full_dim, d.mass.dim());
  ExtrapolatedSpectrum robin_x;
  for (;;) {
    count = std::min(count, full_dim);
    std::vector<Spectrum> robin_levels;
    for (std::size_t i = 0; i < data.size(); ++i) {
      Spectrum rb = solve(data[i].robin, data[i].mass, count, sopt);
      rb.problem = "boundary operator, " + level_tag(opts.levels[i]);
      robin_levels.push_back(std::move(rb));
    }
    robin_x = extrapolate(robin_levels);
    const ExtrapolatedValue& top = robin_x.values.back();
    if (count == full_dim || top.value - top.error > top_target.value + top_target.error) break;
    count *= 2;
  }

  InequalityReport report;
  report.domain = domain.name;
  report.theta = spec.text;
  report.options = opts;
  report.constant_wave_case = spec.is_zero();

  std::vector<ValueWithError> robin_values, dirichlet_values;
  for (const ExtrapolatedValue& v : robin_x.values) robin_values.push_back(as_value(v));
  for (const ExtrapolatedValue& v : dirichlet_x.values) dirichlet_values.push_back(as_value(v));

  report.rows.reserve(J);
  Verdict worst = Verdict::holds_strict;
  for (int j = 1; j <= J; ++j) {
    InequalityRow row;
    row.j = j;
    row.robin_next = robin_values[j];  // (j+1)-th, 0-based j
    row.dirichlet = dirichlet_values[j - 1];
    const auto [verdict, margin] = compare_below(row.robin_next, row.dirichlet);
    row.verdict = verdict;
    row.margin = margin;
    if (severity(verdict) > severity(worst)) worst = verdict;
    report.rows.push_back(row);

    CountingReport counting_row =
        counting_verdict(robin_values, dirichlet_values, j, opts.merge_rtol);
    counting_row.domain = domain.name;
    counting_row.theta = spec.text;
    report.counting.push_back(std::move(counting_row));
  }
  report.overall = worst;

  // Side conditions on the finest mesh.
  const LevelData& fine = data.back();
  ConditionSummary& cond = report.conditions;
  cond.eta_samples = opts.eta_samples;
  const double radius = std::sqrt(std::max(top_target.value, 1.0));
  std::mt19937_64 rng(mix_seed(opts.seed, "plane-wave|" + domain.name + "|" + spec.text));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double pw_max = -std::numeric_limits<double>::infinity();
  double pw_scale = 0.0;
  for (int k = 0; k < opts.eta_samples; ++k) {
    const double phi = 2.0 * kPi * unif(rng);
    const double r = radius * (1.0 - unif(rng));  // in (0, radius], zero excluded
    const Eigen::Vector2d eta(r * std::cos(phi), r * std::sin(phi));
    const double value = plane_wave_form(fine.mesh, fine.traversal, spec, eta);
    pw_max = std::max(pw_max, value);
    pw_scale = std::max(pw_scale, std::abs(value));
  }
  if (opts.eta_samples <= 0) pw_max = 0.0;
  cond.plane_wave_max = pw_max;
  cond.plane_wave_nonpositive = pw_max <= 1e-10 * std::max(1.0, pw_scale);

  const NonpositivityVerdict np = check_nonpositive(fine.theta);
  cond.nonpositive_witness = np.witness;
  cond.operator_nonpositive = np.nonpositive;
  cond.admissible = classify(spec, fine.mesh, fine.traversal, opts.delta).pass;

  // The ordering chain is an invariant only for nonpositive operators, but
  // it is measured unconditionally so failures surface in reports.
  cond.chain_expected = np.nonpositive;
  bool ok = true;
  for (int j = 1; j <= J && ok; ++j) {
    const ValueWithError rb = robin_values[j - 1];
    const ValueWithError nm = as_value(neumann_x.values[j - 1]);
    const ValueWithError dr = dirichlet_values[j - 1];
    if (compare_below(rb, nm).first == Verdict::violated) ok = false;
    if (compare_below(nm, dr).first == Verdict::violated) ok = false;
  }
  cond.chain_ok = ok;
  return report;
}

CountingReport counting_verdict(const std::vector<ValueWithError>& robin,
                                const std::vector<ValueWithError>& dirichlet, int j,
                                double merge_rtol) {
  if (j < 1) throw std::invalid_argument("need a positive eigenvalue index");
  if (static_cast<int>(dirichlet.size()) < j) {
    throw std::invalid_argument("essential spectrum window does not reach the requested index");
  }
  const ValueWithError target = dirichlet[j - 1];
  const double tie_band = merge_rtol * std::max(1.0, std::abs(target.value));

  CountingReport report;
  report.j = j;
  report.dirichlet_j = target;
  for (const ValueWithError& d : dirichlet) {
    if (d.value <= target.value + target.error + d.error + tie_band) ++report.dirichlet_upto;
  }
  for (const ValueWithError& r : robin) {
    if (r.value + r.error < target.value - target.error) {
      ++report.robin_strictly_below;
    } else if (r.value - r.error <= target.value + target.error) {
      ++report.robin_ambiguous;
    }
  }
  if (report.robin_strictly_below >= report.dirichlet_upto + 1) {
    report.verdict = Verdict::holds_strict;
  } else if (report.robin_strictly_below + report.robin_ambiguous < j + 1) {
    // Even resolving every straddling bar downward misses the weakest
    // possible requirement (the first j essential values always count).
    report.verdict = Verdict::violated;
  } else {
    report.verdict = Verdict::inconclusive;
  }
  return report;
}

CountingReport verify_counting(const PolygonalDomain& domain, const BoundaryOperatorSpec& spec,
                               int j, const HarnessOptions& opts) {
  if (j < 1) throw std::invalid_argument("need a positive eigenvalue index");
  validate_levels(opts.levels);

  SolveOptions sopt = opts.solver;
  sopt.want_vectors = false;
  sopt.seed = mix_seed(opts.seed, "counting|" + domain.name + "|" + spec.text);

  std::vector<LevelData> data;
  for (int level : opts.levels) data.push_back(build_level(domain, spec, level));

  std::vector<Spectrum> dirichlet_levels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Spectrum dr = solve(data[i].reduction.stiffness, data[i].reduction.mass, j + 5, sopt);
    dr.problem = "essential, " + level_tag(opts.levels[i]);
    dirichlet_levels.push_back(std::move(dr));
  }
  const ExtrapolatedSpectrum dirichlet_x = extrapolate(dirichlet_levels);
  const ValueWithError target = as_value(dirichlet_x.values[j - 1]);

  // Widen the boundary-operator window until its top value sits above the
  // threshold with separated bars, so no eigenvalue below goes uncounted.
  int count = j + 6;
  int full_dim = data.front().mass.dim();
  for (const LevelData& d : data) full_dim = std::min(full_dim, d.mass.dim());
  ExtrapolatedSpectrum robin_x;
  for (;;) {
    count = std::min(count, full_dim);
    std::vector<Spectrum> robin_levels;
    for (std::size_t i = 0; i < data.size(); ++i) {
      Spectrum rb = solve(data[i].robin, data[i].mass, count, sopt);
      rb.problem = "boundary operator, " + level_tag(opts.levels[i]);
      robin_levels.push_back(std::move(rb));
    }
    robin_x = extrapolate(robin_levels);
    const ExtrapolatedValue& top = robin_x.values.back();
    if (count == full_dim || top.value - top.error > target.value + target.error) break;
    count *= 2;
  }

  std::vector<ValueWithError> robin_values, dirichlet_values;
  for (const ExtrapolatedValue& v : robin_x.values) robin_values.push_back(as_value(v));
  for (const ExtrapolatedValue& v : dirichlet_x.values) dirichlet_values.push_back(as_value(v));

  CountingReport report = counting_verdict(robin_values, dirichlet_values, j, opts.merge_rtol);
  report.domain = domain.name;
  report.theta = spec.text;
  report.options = opts;
  return report;
}

Eigen::Vector2d select_plane_wave_direction(double radius, const Eigen::Vector2d* preferred,
                                            const std::function<bool(const Eigen::Vector2d&)>& accept,
                                            std::mt19937_64& rng, int* resamples) {
  if (!(radius > 0.0)) throw std::invalid_argument("plane-wave radius must be positive");
  if (!accept) throw std::invalid_argument("missing acceptance predicate");
  int rejected = 0;
  const auto chosen = [&](const Eigen::Vector2d& eta) {
    if (resamples != nullptr) *resamples = rejected;
    return eta;
  };
  int attempt = 0;
  if (preferred != nullptr) {
    const double nrm = preferred->norm();
    if (!(nrm > 0.0)) throw std::invalid_argument("preferred direction must be nonzero");
    const Eigen::Vector2d cand = (*preferred) * (radius / nrm);
    if (accept(cand)) return chosen(cand);
    ++rejected;
    ++attempt;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (; attempt < 16; ++attempt) {
    const double phi = 2.0 * kPi * unif(rng);
    const Eigen::Vector2d cand(radius * std::cos(phi), radius * std::sin(phi));
    if (accept(cand)) return chosen(cand);
    ++rejected;
  }
  throw std::runtime_error("no admissible plane-wave direction after 16 attempts");
}

TrialLevelResult filonov_trial_level(const TriangleMesh& mesh, const BoundaryTraversal& traversal,
                                     const BoundaryOperatorSpec& spec, const DiscreteForm& stiffness,
                                     const DiscreteForm& mass, const DiscreteForm& theta_form,
                                     const DirichletReduction& reduction,
                                     const Spectrum& dirichlet, const Spectrum& robin, int j,
                                     const Eigen::Vector2d* eta0, std::mt19937_64& rng) {
  if (j < 1 || j > static_cast<int>(dirichlet.eigenvalues.size())) {
    throw std::invalid_argument("eigenvalue index outside the essential window");
  }
  if (dirichlet.vectors.cols() != static_cast<Eigen::Index>(dirichlet.eigenvalues.size()) ||
      robin.vectors.cols() != static_cast<Eigen::Index>(robin.eigenvalues.size())) {
    throw std::invalid_argument("trial space needs eigenvectors; solve with want_vectors");
  }

  const int n = mesh.num_nodes();
  const double lambda = dirichlet.eigenvalues[j - 1];
  if (!(lambda > 0.0)) throw std::runtime_error("essential eigenvalue is not positive");

  using Complex = std::complex<double>;
  using MatrixXcd = Eigen::MatrixXcd;

  // Essential eigenvectors through the j-th value (ties included), extended
  // by zero to the whole mesh; they stay M-orthonormal.
  const double tie_tol = 1e-8 * std::max(1.0, lambda);
  std::vector<int> span_cols;
  for (int i = 0; i < static_cast<int>(dirichlet.eigenvalues.size()); ++i) {
    if (dirichlet.eigenvalues[i] <= lambda + tie_tol) span_cols.push_back(i);
  }
  // Boundary-problem eigenvectors at the same value.
  const double eq_tol = 1e-6 * std::max(1.0, lambda);
  std::vector<int> kernel_cols;
  for (int i = 0; i < static_cast<int>(robin.eigenvalues.size()); ++i) {
    if (std::abs(robin.eigenvalues[i] - lambda) <= eq_tol) kernel_cols.push_back(i);
  }

  const int fixed = static_cast<int>(span_cols.size() + kernel_cols.size());
  MatrixXcd basis(n, fixed + 1);
  basis.setZero();
  int col = 0;
  for (int i : span_cols) {
    for (std::size_t r = 0; r < reduction.interior.size(); ++r) {
      basis(reduction.interior[r], col) = Complex(dirichlet.vectors(r, i), 0.0);
    }
    ++col;
  }
  for (int i : kernel_cols) {
    basis.col(col) = robin.vectors.col(i).cast<Complex>();
    ++col;
  }

  const auto complex_apply = [](const Eigen::SparseMatrix<double>& a, const MatrixXcd& w) {
    MatrixXcd out(w.rows(), w.cols());
    out.real() = a * w.real().eval();
    out.imag() = a * w.imag().eval();
    return out;
  };

  TrialLevelResult result;
  result.level = mesh.level;
  result.h = mesh.h;
  result.lambda = lambda;
  result.dim_span = static_cast<int>(span_cols.size());
  result.dim_kernel = static_cast<int>(kernel_cols.size());

  // A candidate direction is admissible when the sampled sign condition
  // holds and the enlarged basis stays numerically independent in the mass
  // inner product.
  MatrixXcd chosen_basis, chosen_gram;
  const auto accept = [&](const Eigen::Vector2d& eta) {
    const double pw = plane_wave_form(mesh, traversal, spec, eta);
    if (pw > 1e-10 * std::max(1.0, std::abs(pw))) return false;
    MatrixXcd w = basis;
    for (int node = 0; node < n; ++node) {
      const double phase = eta.dot(mesh.nodes[node]);
      w(node, fixed) = Complex(std::cos(phase), std::sin(phase));
    }
    MatrixXcd mw = complex_apply(mass.matrix, w);
    for (int c = 0; c < w.cols(); ++c) {
      const double nrm = std::sqrt(std::real(w.col(c).dot(mw.col(c))));
      if (!(nrm > 1e-12)) return false;
      w.col(c) /= nrm;
      mw.col(c) /= nrm;
    }
    MatrixXcd gram = w.adjoint() * mw;
    gram = 0.5 * (gram + gram.adjoint()).eval();
    const Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 1e-10) return false;
    chosen_basis = std::move(w);
    chosen_gram = std::move(gram);
    return true;
  };

  result.eta =
      select_plane_wave_direction(std::sqrt(lambda), eta0, accept, rng, &result.resamples);

  DiscreteForm robin_form;
  robin_form.matrix = stiffness.matrix + theta_form.matrix;
  const MatrixXcd aw = chosen_basis.adjoint() * complex_apply(robin_form.matrix, chosen_basis);
  const MatrixXcd a_h = 0.5 * (aw + aw.adjoint());
  const Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXcd> ges(a_h, chosen_gram,
                                                                Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success) {
    throw std::runtime_error("trial-space Rayleigh problem failed to factor");
  }
  result.max_rayleigh = ges.eigenvalues().maxCoeff();
  result.c_measured = (result.max_rayleigh / lambda - 1.0) / (mesh.h * mesh.h);
  return result;
}

TrialSpaceReport filonov_trial_check(const PolygonalDomain& domain,
                                     const BoundaryOperatorSpec& spec, int j,
                                     const HarnessOptions& opts, const Eigen::Vector2d* eta0) {
  if (j < 1) throw std::invalid_argument("need a positive eigenvalue index");
  validate_levels(opts.levels);

  TrialSpaceReport report;
  report.domain = domain.name;
  report.theta = spec.text;
  report.options = opts;
  report.j = j;

  SolveOptions sopt = opts.solver;
  sopt.want_vectors = true;
  sopt.seed = mix_seed(opts.seed, "trial|" + domain.name + "|" + spec.text);

  for (int level : opts.levels) {
    const LevelData d = build_level(domain, spec, level);
    Spectrum dirichlet = solve(d.reduction.stiffness, d.reduction.mass, j + 3, sopt);
    dirichlet.problem = "essential, " + level_tag(level);
    Spectrum robin = solve(d.robin, d.mass, j + 6, sopt);
    robin.problem = "boundary operator, " + level_tag(level);
    // Reseeded identically per level: the same direction angle is used at
    // every level (scaled to that level's radius), so the measured constants
    // are comparable across refinements.
    std::mt19937_64 rng(
        mix_seed(opts.seed, "trial-eta|" + domain.name + "|" + spec.text + "|" + std::to_string(j)));
    report.levels.push_back(filonov_trial_level(d.mesh, d.traversal, spec, d.stiffness, d.mass,
                                                d.theta, d.reduction, dirichlet, robin, j, eta0,
                                                rng));
  }
  return report;
}

SafarovReport safarov_weak_check(const PolygonalDomain& domain, const BoundaryOperatorSpec& spec,
                                 int j, const std::vector<Eigen::Vector2d>& etas,
                                 const HarnessOptions& opts) {
  if (j < 1) throw std::invalid_argument("need a positive eigenvalue index");
  if (etas.empty()) throw std::invalid_argument("need at least one direction");
  validate_levels(opts.levels);

  SafarovReport report;
  report.domain = domain.name;
  report.theta = spec.text;
  report.options = opts;
  report.j = j;

  const InequalityReport interlacing = verify_interlacing(domain, spec, j, opts);
  report.interlacing_verdict = interlacing.rows[j - 1].verdict;

  SolveOptions sopt = opts.solver;
  sopt.want_vectors = false;
  sopt.seed = mix_seed(opts.seed, "certificate|" + domain.name + "|" + spec.text);

  std::vector<Spectrum> dirichlet_levels;
  TriangleMesh fine_mesh;
  for (int level : opts.levels) {
    fine_mesh = mesh_at_level(domain, level);
    const DiscreteForm a = assemble_stiffness(fine_mesh);
    const DiscreteForm m = assemble_mass(fine_mesh);
    const DirichletReduction red = reduce_dirichlet(a, m, fine_mesh);
    Spectrum dr = solve(red.stiffness, red.mass, j, sopt);
    dr.problem = "essential, " + level_tag(level);
    dirichlet_levels.push_back(std::move(dr));
  }
  const ExtrapolatedSpectrum dirichlet_x = extrapolate(dirichlet_levels);
  report.dirichlet_j = as_value(dirichlet_x.values[j - 1]);
  if (!(report.dirichlet_j.value > 0.0)) {
    throw std::runtime_error("essential eigenvalue is not positive");
  }

  const BoundaryTraversal traversal = boundary_traversal(fine_mesh);
  const double radius = std::sqrt(report.dirichlet_j.value);

  std::vector<Eigen::Vector2d> certifying;
  for (const Eigen::Vector2d& given : etas) {
    EtaCertificate cert;
    cert.eta_given = given;
    const double nrm = given.norm();
    if (!(nrm > 0.0)) throw std::invalid_argument("directions must be nonzero");
    cert.eta = given * (radius / nrm);
    cert.rescaled = std::abs(nrm - radius) > 1e-12 * std::max(1.0, radius);
    cert.value = plane_wave_form(fine_mesh, traversal, spec, cert.eta);
    cert.certifies = cert.value <= 1e-10 * std::max(1.0, std::abs(cert.value));
    if (cert.certifies) certifying.push_back(cert.eta);
    report.etas.push_back(cert);
  }

  // Count pairwise-distinct certifying directions.
  const double sep = 1e-8 * (1.0 + radius);
  std::vector<Eigen::Vector2d> reps;
  for (const Eigen::Vector2d& eta : certifying) {
    bool fresh = true;
    for (const Eigen::Vector2d& r : reps) {
      if ((eta - r).norm() <= sep) {
        fresh = false;
        break;
      }
    }
    if (fresh) reps.push_back(eta);
  }
  report.certifying_distinct = static_cast<int>(reps.size());
  report.weak_certified = report.certifying_distinct >= 1;
  report.strict_certified = report.certifying_distinct >= 2;
  return report;
}

double trace_beta(const TriangleMesh& mesh, const BoundaryTraversal& traversal, double eps,
                  const SolveOptions& solver) {
  if (!(eps > 0.0)) throw std::invalid_argument("trace inequality needs a positive epsilon");
  const DiscreteForm a = assemble_stiffness(mesh);
  const DiscreteForm m = assemble_mass(mesh);
  int sides = 0;
  for (const TriangleMesh::BoundaryEdge& e : mesh.boundary_edges) {
    sides = std::max(sides, e.side + 1);
  }
  const DiscreteForm t = assemble_boundary_weighted(mesh, traversal, std::vector<double>(sides, 1.0));

  DiscreteForm shifted;
  shifted.matrix = eps * a.matrix - t.matrix;
  SolveOptions sopt = solver;
  sopt.want_vectors = false;
  const Spectrum s = solve(shifted, m, 1, sopt);
  return -s.eigenvalues.front();
}

double coercivity_kappa(const TriangleMesh& mesh, const BoundaryTraversal& traversal,
                        const BoundaryOperatorSpec& spec, const SolveOptions& solver) {
  const DiscreteForm a = assemble_stiffness(mesh);
  const DiscreteForm m = assemble_mass(mesh);
  const DiscreteForm b = theta_matrix(mesh, traversal, spec);

  DiscreteForm shifted;
  shifted.matrix = 0.5 * a.matrix + b.matrix - 0.5 * m.matrix;
  SolveOptions sopt = solver;
  sopt.want_vectors = false;
  const Spectrum s = solve(shifted, m, 1, sopt);
  return -s.eigenvalues.front();
}

namespace {

ordered_json json_problem(const std::string& domain, const std::string& theta) {
  return ordered_json{{"domain", domain}, {"theta", theta}};
}

// The full resolved configuration, embedded in every report.
ordered_json json_environment(const HarnessOptions& opts) {
  return ordered_json{{"levels", opts.levels},
                      {"seed", opts.seed},
                      {"merge_rtol", opts.merge_rtol},
                      {"delta", opts.delta},
                      {"eta_samples", opts.eta_samples},
                      {"dense_threshold", opts.solver.dense_threshold},
                      {"residual_rtol", opts.solver.residual_rtol},
                      {"residual_atol", opts.solver.residual_atol}};
}

ordered_json json_counting_row(const CountingReport& row) {
  return ordered_json{{"j", row.j},
                      {"lambda_dirichlet", row.dirichlet_j.value},
                      {"lambda_dirichlet_err", row.dirichlet_j.error},
                      {"robin_strictly_below", row.robin_strictly_below},
                      {"robin_ambiguous", row.robin_ambiguous},
                      {"dirichlet_upto", row.dirichlet_upto},
                      {"verdict", to_string(row.verdict)}};
}

}  // namespace

std::string to_json(const InequalityReport& report) {
  ordered_json rows = ordered_json::array();
  for (const InequalityRow& row : report.rows) {
    rows.push_back(ordered_json{{"j", row.j},
                                {"lambda_theta", row.robin_next.value},
                                {"lambda_theta_err", row.robin_next.error},
                                {"lambda_dirichlet", row.dirichlet.value},
                                {"lambda_dirichlet_err", row.dirichlet.error},
                                {"margin", row.margin},
                                {"verdict", to_string(row.verdict)}});
  }
  ordered_json counting = ordered_json::array();
  for (const CountingReport& row : report.counting) counting.push_back(json_counting_row(row));
  const ConditionSummary& c = report.conditions;
  ordered_json doc{{"schema_version", 1},
                   {"kind", "interlacing"},
                   {"problem", json_problem(report.domain, report.theta)},
                   {"constant_wave_case", report.constant_wave_case},
                   {"rows", rows},
                   {"counting", counting},
                   {"conditions",
                    ordered_json{{"eta_samples", c.eta_samples},
                                 {"plane_wave_max", c.plane_wave_max},
                                 {"plane_wave_nonpositive", c.plane_wave_nonpositive},
                                 {"nonpositive_witness", c.nonpositive_witness},
                                 {"operator_nonpositive", c.operator_nonpositive},
                                 {"admissible", c.admissible},
                                 {"chain_expected", c.chain_expected},
                                 {"chain_ok", c.chain_ok}}},
                   {"overall", to_string(report.overall)},
                   {"environment", json_environment(report.options)}};
  return doc.dump(2);
}

std::string to_json(const CountingReport& report) {
  ordered_json doc{{"schema_version", 1},
                   {"kind", "counting"},
                   {"problem", json_problem(report.domain, report.theta)},
                   {"row", json_counting_row(report)},
                   {"verdict", to_string(report.verdict)},
                   {"environment", json_environment(report.options)}};
  return doc.dump(2);
}

std::string to_json(const TrialSpaceReport& report) {
  ordered_json levels = ordered_json::array();
  for (const TrialLevelResult& r : report.levels) {
    levels.push_back(ordered_json{{"level", r.level},
                                  {"h", r.h},
                                  {"lambda", r.lambda},
                                  {"dim_span", r.dim_span},
                                  {"dim_kernel", r.dim_kernel},
                                  {"resamples", r.resamples},
                                  {"eta", json_vec2(r.eta)},
                                  {"max_rayleigh", r.max_rayleigh},
                                  {"c_measured", r.c_measured}});
  }
  ordered_json doc{{"schema_version", 1},
                   {"kind", "trial_space"},
                   {"problem", json_problem(report.domain, report.theta)},
                   {"j", report.j},
                   {"levels", levels},
                   {"environment", json_environment(report.options)}};
  return doc.dump(2);
}

std::string to_json(const SafarovReport& report) {
  ordered_json etas = ordered_json::array();
  for (const EtaCertificate& cert : report.etas) {
    etas.push_back(ordered_json{{"eta_given", json_vec2(cert.eta_given)},
                                {"eta", json_vec2(cert.eta)},
                                {"rescaled", cert.rescaled},
                                {"value", cert.value},
                                {"certifies", cert.certifies}});
  }
  ordered_json doc{{"schema_version", 1},
                   {"kind", "plane_wave_certificate"},
                   {"problem", json_problem(report.domain, report.theta)},
                   {"j", report.j},
                   {"lambda_dirichlet", report.dirichlet_j.value},
                   {"lambda_dirichlet_err", report.dirichlet_j.error},
                   {"etas", etas},
                   {"certifying_distinct", report.certifying_distinct},
                   {"weak_certified", report.weak_certified},
                   {"strict_certified", report.strict_certified},
                   {"interlacing_verdict", to_string(report.interlacing_verdict)},
                   {"environment", json_environment(report.options)}};
  return doc.dump(2);
}

}  // namespace robinlab
