// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#include "robinlab/assembly.hpp"
#include "robinlab/boundary_ops.hpp"
#include "robinlab/eigensolve.hpp"
#include "robinlab/geometry.hpp"
#include "robinlab/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using robinlab::Verdict;

// Exit-code contract: 0 all strict/pass, 2 weak or inconclusive present,
// 3 violated present, 1 execution error.
int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::holds_strict: return 0;
    case Verdict::holds_weak: return 2;
    case Verdict::inconclusive: return 2;
    case Verdict::violated: return 3;
  }
  return 1;
}

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> levels;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) levels.push_back(std::stoi(item));
  return levels;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  return values;
}

Eigen::Vector2d parse_eta(const std::string& text) {
  const std::vector<double> xy = parse_doubles(text);
  if (xy.size() != 2) throw std::invalid_argument("direction must be given as x,y");
  return {xy[0], xy[1]};
}

// Writes to the path when given, else to stdout.
void emit(const std::string& out_path, const std::string& payload) {
  if (out_path.empty()) {
    std::cout << payload;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
  out << payload;
  if (!out) throw std::runtime_error("write failed: " + out_path);
}

std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct VerifyArgs {
  std::string domain;
  std::string theta = "zero";
  std::string levels = "4,5";
  unsigned long long seed = 42;
  std::string out_path;
};

robinlab::HarnessOptions harness_options(const VerifyArgs& args) {
  robinlab::HarnessOptions opts;
  opts.levels = parse_levels(args.levels);
  opts.seed = args.seed;
  opts.solver.seed = args.seed;
  return opts;
}

void add_verify_flags(CLI::App* cmd, VerifyArgs& args) {
  cmd->add_option("--domain", args.domain, "domain name or catalog spec")->required();
  cmd->add_option("--theta", args.theta, "boundary operator spec string");
  cmd->add_option("--levels", args.levels, "comma-separated consecutive mesh levels");
  cmd->add_option("--seed", args.seed, "random seed");
  cmd->add_option("--out", args.out_path, "report path (stdout when omitted)");
}

int run_mesh(const std::string& domain_spec, int level, const std::string& out_path) {
  const robinlab::PolygonalDomain domain = robinlab::make_domain(domain_spec);
  const robinlab::TriangleMesh mesh = robinlab::mesh_at_level(domain, level);
  std::ostringstream payload;
  robinlab::write_m2d(payload, mesh);
  emit(out_path, payload.str());
  return 0;
}

int run_solve(const std::string& domain_spec, const std::string& bc, int level, int count,
              unsigned long long seed, const std::string& out_path) {
  const robinlab::PolygonalDomain domain = robinlab::make_domain(domain_spec);
  const robinlab::TriangleMesh mesh = robinlab::mesh_at_level(domain, level);
  const robinlab::DiscreteForm stiffness = robinlab::assemble_stiffness(mesh);
  const robinlab::DiscreteForm mass = robinlab::assemble_mass(mesh);

  robinlab::SolveOptions sopt;
  sopt.want_vectors = false;
  sopt.seed = seed;

  robinlab::Spectrum spectrum;
  if (bc == "dirichlet") {
    const robinlab::DirichletReduction red = robinlab::reduce_dirichlet(stiffness, mass, mesh);
    spectrum = robinlab::solve(red.stiffness, red.mass, count, sopt);
  } else if (bc == "neumann") {
    spectrum = robinlab::solve(stiffness, mass, count, sopt);
  } else if (bc.rfind("robin:", 0) == 0) {
    const robinlab::BoundaryOperatorSpec spec = robinlab::parse_boundary_spec(bc.substr(6));
    const robinlab::BoundaryTraversal traversal = robinlab::boundary_traversal(mesh);
    robinlab::DiscreteForm robin;
    robin.matrix = stiffness.matrix + robinlab::theta_matrix(mesh, traversal, spec).matrix;
    spectrum = robinlab::solve(robin, mass, count, sopt);
  } else {
    throw std::invalid_argument("--bc must be dirichlet, neumann, or robin:<spec>");
  }
  spectrum.problem = domain.name + ", " + bc + ", level " + std::to_string(level);

  std::ostringstream payload;
  robinlab::write_spectrum_csv(payload, spectrum);
  emit(out_path, payload.str());
  return 0;
}

int run_trace_beta(const std::string& domain_spec, int level, const std::string& eps_list,
                   const std::string& out_path) {
  const robinlab::PolygonalDomain domain = robinlab::make_domain(domain_spec);
  const robinlab::TriangleMesh mesh = robinlab::mesh_at_level(domain, level);
  const robinlab::BoundaryTraversal traversal = robinlab::boundary_traversal(mesh);
  std::ostringstream payload;
  payload << "eps,beta\n";
  for (double eps : parse_doubles(eps_list)) {
    const double beta = robinlab::trace_beta(mesh, traversal, eps);
    payload << format_g17(eps) << "," << format_g17(beta) << "\n";
  }
  emit(out_path, payload.str());
  return 0;
}

int run_plane_wave(const std::string& domain_spec, const std::string& theta,
                   const std::vector<std::string>& eta_args, int random_count, int level,
                   double radius, unsigned long long seed, const std::string& out_path) {
  const robinlab::PolygonalDomain domain = robinlab::make_domain(domain_spec);
  const robinlab::BoundaryOperatorSpec spec = robinlab::parse_boundary_spec(theta);
  const robinlab::TriangleMesh mesh = robinlab::mesh_at_level(domain, level);
  const robinlab::BoundaryTraversal traversal = robinlab::boundary_traversal(mesh);

  std::vector<Eigen::Vector2d> etas;
  for (const std::string& text : eta_args) etas.push_back(parse_eta(text));
  if (random_count > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < random_count; ++k) {
      const double phi = 2.0 * 3.14159265358979323846 * unif(rng);
      etas.emplace_back(radius * std::cos(phi), radius * std::sin(phi));
    }
  }
  if (etas.empty()) throw std::invalid_argument("supply --eta or --random");

  std::ostringstream payload;
  payload << "eta_x,eta_y,value\n";
  for (const Eigen::Vector2d& eta : etas) {
    const double value = robinlab::plane_wave_form(mesh, traversal, spec, eta);
    payload << format_g17(eta.x()) << "," << format_g17(eta.y()) << "," << format_g17(value)
            << "\n";
  }
  emit(out_path, payload.str());
  return 0;
}

int run_plot_data(const std::string& from_path, const std::string& out_path) {
  std::ifstream in(from_path);
  if (!in) throw std::runtime_error("cannot open report: " + from_path);
  nlohmann::json doc;
  in >> doc;
  if (!doc.contains("rows")) throw std::runtime_error("report has no rows field");
  std::ostringstream payload;
  payload << "j,lambda_theta,lambda_dirichlet,margin\n";
  for (const auto& row : doc["rows"]) {
    payload << row.at("j").get<int>() << "," << format_g17(row.at("lambda_theta").get<double>())
            << "," << format_g17(row.at("lambda_dirichlet").get<double>()) << ","
            << format_g17(row.at("margin").get<double>()) << "\n";
  }
  emit(out_path, payload.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral comparison laboratory for Laplacians on polygons"};
  app.require_subcommand(1);

  // mesh
  std::string mesh_domain, mesh_out;
  int mesh_level = 0;
  CLI::App* mesh_cmd = app.add_subcommand("mesh", "triangulate a domain and write it");
  mesh_cmd->add_option("domain", mesh_domain, "domain name or catalog spec")->required();
  mesh_cmd->add_option("--level", mesh_level, "refinement level");
  mesh_cmd->add_option("--out", mesh_out, "output path (stdout when omitted)");

  // solve
  std::string solve_domain, solve_bc, solve_out;
  int solve_level = 4, solve_count = 10;
  unsigned long long solve_seed = 42;
  CLI::App* solve_cmd = app.add_subcommand("solve", "compute one spectrum window");
  solve_cmd->add_option("--domain", solve_domain)->required();
  solve_cmd->add_option("--bc", solve_bc, "dirichlet | neumann | robin:<spec>")->required();
  solve_cmd->add_option("--level", solve_level, "refinement level");
  solve_cmd->add_option("--count", solve_count, "number of eigenvalues");
  solve_cmd->add_option("--seed", solve_seed, "random seed");
  solve_cmd->add_option("--out", solve_out, "CSV path (stdout when omitted)");

  // verify
  CLI::App* verify_cmd = app.add_subcommand("verify", "run an inequality verification");
  verify_cmd->require_subcommand(1);

  VerifyArgs inter_args;
  int inter_jmax = 10;
  CLI::App* inter_cmd = verify_cmd->add_subcommand("interlace", "eigenvalue comparison rows");
  add_verify_flags(inter_cmd, inter_args);
  inter_cmd->add_option("--jmax", inter_jmax, "compare rows j = 1..jmax");

  VerifyArgs count_args;
  int count_j = 1;
  CLI::App* count_cmd = verify_cmd->add_subcommand("counting", "spectrum counting comparison");
  add_verify_flags(count_cmd, count_args);
  count_cmd->add_option("--j", count_j, "threshold index");

  VerifyArgs filonov_args;
  int filonov_j = 1;
  std::string filonov_eta;
  CLI::App* filonov_cmd = verify_cmd->add_subcommand("filonov", "trial-space Rayleigh bound");
  add_verify_flags(filonov_cmd, filonov_args);
  filonov_cmd->add_option("--j", filonov_j, "threshold index");
  filonov_cmd->add_option("--eta", filonov_eta, "preferred direction x,y");

  VerifyArgs safarov_args;
  int safarov_j = 1, safarov_random = 0;
  std::vector<std::string> safarov_etas;
  CLI::App* safarov_cmd = verify_cmd->add_subcommand("safarov", "plane-wave sign certificates");
  add_verify_flags(safarov_cmd, safarov_args);
  safarov_cmd->add_option("--j", safarov_j, "threshold index");
  safarov_cmd->add_option("--eta", safarov_etas, "direction x,y (repeatable)");
  safarov_cmd->add_option("--random", safarov_random, "additional random directions");

  // trace-beta
  std::string tb_domain, tb_eps = "0.4,0.2,0.1,0.05", tb_out;
  int tb_level = 4;
  CLI::App* tb_cmd = app.add_subcommand("trace-beta", "trace inequality constant sweep");
  tb_cmd->add_option("--domain", tb_domain)->required();
  tb_cmd->add_option("--level", tb_level, "refinement level");
  tb_cmd->add_option("--eps", tb_eps, "comma-separated epsilon values");
  tb_cmd->add_option("--out", tb_out, "CSV path (stdout when omitted)");

  // plane-wave
  std::string pw_domain, pw_theta = "zero", pw_out;
  std::vector<std::string> pw_etas;
  int pw_random = 0, pw_level = 4;
  double pw_radius = 1.0;
  unsigned long long pw_seed = 42;
  CLI::App* pw_cmd = app.add_subcommand("plane-wave", "boundary form values on plane waves");
  pw_cmd->add_option("--domain", pw_domain)->required();
  pw_cmd->add_option("--theta", pw_theta, "boundary operator spec string");
  pw_cmd->add_option("--eta", pw_etas, "direction x,y (repeatable)");
  pw_cmd->add_option("--random", pw_random, "number of random directions");
  pw_cmd->add_option("--level", pw_level, "refinement level");
  pw_cmd->add_option("--radius", pw_radius, "radius for random directions");
  pw_cmd->add_option("--seed", pw_seed, "random seed");
  pw_cmd->add_option("--out", pw_out, "CSV path (stdout when omitted)");

  // plot-data
  std::string plot_from, plot_out;
  CLI::App* plot_cmd = app.add_subcommand("plot-data", "extract plottable series from a report");
  plot_cmd->add_option("--from", plot_from, "interlacing report JSON")->required();
  plot_cmd->add_option("--out", plot_out, "CSV path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*mesh_cmd) return run_mesh(mesh_domain, mesh_level, mesh_out);
    if (*solve_cmd) {
      return run_solve(solve_domain, solve_bc, solve_level, solve_count, solve_seed, solve_out);
    }
    if (*inter_cmd) {
      const robinlab::PolygonalDomain domain = robinlab::make_domain(inter_args.domain);
      const robinlab::BoundaryOperatorSpec spec = robinlab::parse_boundary_spec(inter_args.theta);
      const robinlab::InequalityReport report =
          robinlab::verify_interlacing(domain, spec, inter_jmax, harness_options(inter_args));
      emit(inter_args.out_path, robinlab::to_json(report) + "\n");
      return verdict_exit(report.overall);
    }
    if (*count_cmd) {
      const robinlab::PolygonalDomain domain = robinlab::make_domain(count_args.domain);
      const robinlab::BoundaryOperatorSpec spec = robinlab::parse_boundary_spec(count_args.theta);
      const robinlab::CountingReport report =
          robinlab::verify_counting(domain, spec, count_j, harness_options(count_args));
      emit(count_args.out_path, robinlab::to_json(report) + "\n");
      return verdict_exit(report.verdict);
    }
    if (*filonov_cmd) {
      const robinlab::PolygonalDomain domain = robinlab::make_domain(filonov_args.domain);
      const robinlab::BoundaryOperatorSpec spec =
          robinlab::parse_boundary_spec(filonov_args.theta);
      std::optional<Eigen::Vector2d> eta0;
      if (!filonov_eta.empty()) eta0 = parse_eta(filonov_eta);
      const robinlab::TrialSpaceReport report = robinlab::filonov_trial_check(
          domain, spec, filonov_j, harness_options(filonov_args), eta0 ? &*eta0 : nullptr);
      emit(filonov_args.out_path, robinlab::to_json(report) + "\n");
      return 0;
    }
    if (*safarov_cmd) {
      const robinlab::PolygonalDomain domain = robinlab::make_domain(safarov_args.domain);
      const robinlab::BoundaryOperatorSpec spec =
          robinlab::parse_boundary_spec(safarov_args.theta);
      std::vector<Eigen::Vector2d> etas;
      for (const std::string& text : safarov_etas) etas.push_back(parse_eta(text));
      if (safarov_random > 0) {
        std::mt19937_64 rng(safarov_args.seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int k = 0; k < safarov_random; ++k) {
          const double phi = 2.0 * 3.14159265358979323846 * unif(rng);
          etas.emplace_back(std::cos(phi), std::sin(phi));
        }
      }
      const robinlab::SafarovReport report = robinlab::safarov_weak_check(
          domain, spec, safarov_j, etas, harness_options(safarov_args));
      emit(safarov_args.out_path, robinlab::to_json(report) + "\n");
      if (report.interlacing_verdict == Verdict::violated) return 3;
      return report.weak_certified ? 0 : 2;
    }
    if (*tb_cmd) return run_trace_beta(tb_domain, tb_level, tb_eps, tb_out);
    if (*pw_cmd) {
      return run_plane_wave(pw_domain, pw_theta, pw_etas, pw_random, pw_level, pw_radius, pw_seed,
                            pw_out);
    }
    if (*plot_cmd) return run_plot_data(plot_from, plot_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
