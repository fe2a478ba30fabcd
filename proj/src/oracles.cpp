// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#include "robinlab/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace robinlab {

namespace {

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw std::runtime_error("oracles: bisection bracket does not change sign");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(mid))) return mid;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void sort_entries(std::vector<OracleEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const OracleEntry& l, const OracleEntry& r) {
    if (l.value != r.value) return l.value < r.value;
    return l.label < r.label;
  });
}

}  // namespace

std::vector<double> OracleSpectrum::values() const {
  std::vector<double> v;
  for (const auto& e : entries) {
    for (int i = 0; i < e.multiplicity; ++i) v.push_back(e.value);
  }
  return v;
}

double robin_1d_secular_positive(double k, double theta, double length) {
  // Scaled by (theta^2 + k^2) to stay bounded for extreme theta.
  const double norm = theta * theta + k * k;
  if (norm == 0.0) return std::sin(k * length);
  return ((theta * theta - k * k) * std::sin(k * length) +
          2.0 * theta * k * std::cos(k * length)) /
         norm;
}

double robin_1d_secular_negative(double k, double theta, double length) {
  // g(k)/((theta^2 + k^2) cosh(kL)): same roots, no overflow for large kL.
  const double norm = theta * theta + k * k;
  if (norm == 0.0) return std::tanh(k * length);
  return std::tanh(k * length) + 2.0 * theta * k / norm;
}

OracleSpectrum robin_1d(double theta, double length, int count) {
  if (!(length > 0.0)) throw std::invalid_argument("oracles: interval length must be positive");
  if (count < 1) throw std::invalid_argument("oracles: eigenvalue count must be positive");

  OracleSpectrum s;
  if (theta == 0.0) {
    s.provenance = OracleProvenance::closed_form;
    for (int j = 0; j < count; ++j) {
      const double k = static_cast<double>(j) * M_PI / length;
      s.entries.push_back({k * k, 1, std::to_string(j)});
    }
    return s;
  }

  s.provenance = OracleProvenance::transcendental;
  std::vector<double> mus;
  bool zero_mode_inserted = false;

  if (theta < 0.0) {
    // Nonpositive branch: roots of the hyperbolic secular function, at most
    // two. mu = 0 exactly at theta = -2/L.
    if (theta == -2.0 / length) {
      mus.push_back(0.0);
      zero_mode_inserted = true;
    }
    auto g = [&](double k) { return robin_1d_secular_negative(k, theta, length); };
    const double kmax = std::abs(theta) + 8.0 / length + 1.0;
    const int grid = 512;
    double prev_k = 1e-12 * kmax;
    double prev_g = g(prev_k);
    for (int i = 1; i <= grid; ++i) {
      const double kk = kmax * static_cast<double>(i) / grid;
      const double gg = g(kk);
      if (gg == 0.0) {
        mus.push_back(-kk * kk);
      } else if ((prev_g > 0.0) != (gg > 0.0)) {
        const double root = bisect(g, prev_k, kk);
        mus.push_back(-root * root);
      }
      prev_k = kk;
      prev_g = gg;
    }
  }

  // At the degenerate coupling the origin root of the oscillatory secular
  // function IS the inserted zero mode (the next root sits past pi/L), so the
  // first bracket would only rediscover it through cancellation noise.
  auto f = [&](double k) { return robin_1d_secular_positive(k, theta, length); };
  for (int m = zero_mode_inserted ? 1 : 0; static_cast<int>(mus.size()) < count + 2; ++m) {
    const double lo = (m == 0) ? 1e-10 / length : static_cast<double>(m) * M_PI / length;
    const double hi = static_cast<double>(m + 1) * M_PI / length;
    const double flo = f(lo * (m == 0 ? 1.0 : 1.0 + 1e-12));
    const double fhi = f(hi * (1.0 - 1e-12));
    if ((flo > 0.0) != (fhi > 0.0)) {
      const double root = bisect(f, lo, hi);
      mus.push_back(root * root);
    }
    if (m > 4 * (count + 4)) {
      throw std::runtime_error("oracles: secular bracket scan ran past the expected window");
    }
  }

  std::sort(mus.begin(), mus.end());
  for (int j = 0; j < count && j < static_cast<int>(mus.size()); ++j) {
    s.entries.push_back({mus[j], 1, std::to_string(j)});
  }
  return s;
}

OracleSpectrum rectangle_spectrum(double a, double b, const RectangleBC& bc, int count) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("oracles: rectangle sides must be positive");
  }
  if (count < 1) throw std::invalid_argument("oracles: eigenvalue count must be positive");

  auto line_spectrum = [&](double len) {
    std::vector<double> mu;
    switch (bc.kind) {
      case RectangleBC::Kind::dirichlet:
        for (int p = 1; p <= count + 1; ++p) {
          const double k = static_cast<double>(p) * M_PI / len;
          mu.push_back(k * k);
        }
        break;
      case RectangleBC::Kind::neumann:
        for (int p = 0; p <= count; ++p) {
          const double k = static_cast<double>(p) * M_PI / len;
          mu.push_back(k * k);
        }
        break;
      case RectangleBC::Kind::robin:
        mu = robin_1d(bc.theta, len, count + 1).values();
        break;
    }
    return mu;
  };
  const std::vector<double> mua = line_spectrum(a);
  const std::vector<double> mub = line_spectrum(b);
  const int base = bc.kind == RectangleBC::Kind::dirichlet ? 1 : 0;

  OracleSpectrum s;
  s.provenance = bc.kind == RectangleBC::Kind::robin ? OracleProvenance::transcendental
                                                     : OracleProvenance::closed_form;
  for (size_t p = 0; p < mua.size(); ++p) {
    for (size_t q = 0; q < mub.size(); ++q) {
      OracleEntry e;
      e.value = mua[p] + mub[q];
      e.multiplicity = 1;
      e.label = "(" + std::to_string(static_cast<int>(p) + base) + "," +
                std::to_string(static_cast<int>(q) + base) + ")";
      s.entries.push_back(std::move(e));
    }
  }
  sort_entries(s.entries);
  s.entries.resize(count);
  return s;
}

double bessel_j(int order, double x) {
  if (order < 0) throw std::invalid_argument("oracles: Bessel order must be nonnegative");
  if (!(x >= 0.0)) throw std::invalid_argument("oracles: Bessel argument must be nonnegative");

  if (x <= 12.0) {
    const double half = 0.5 * x;
    double term = 1.0;
    for (int i = 1; i <= order; ++i) term *= half / static_cast<double>(i);
    double sum = term;
    const double h2 = half * half;
    for (int j = 1; j <= 400; ++j) {
      term *= -h2 / (static_cast<double>(j) * static_cast<double>(order + j));
      sum += term;
      if (std::abs(term) <= 1e-18 * (std::abs(sum) + 1e-30)) break;
    }
    return sum;
  }

  // Downward recurrence started well above both order and argument; the
  // Neumann sum J_0 + 2 (J_2 + J_4 + ...) = 1 fixes the scale.
  int start = std::max(order + 4, static_cast<int>(x) + 48);
  if (start % 2 != 0) ++start;
  double jp = 0.0;
  double jc = 1e-30;
  double target = 0.0;
  double even_sum = 0.0;
  for (int k = start; k >= 1; --k) {
    const double jm = (2.0 * static_cast<double>(k) / x) * jc - jp;
    jp = jc;
    jc = jm;  // now holds J_{k-1}
    if (std::abs(jc) > 1e10) {
      jc *= 1e-10;
      jp *= 1e-10;
      target *= 1e-10;
      even_sum *= 1e-10;
    }
    const int idx = k - 1;
    if (idx == order) target = jc;
    if (idx >= 2 && idx % 2 == 0) even_sum += jc;
  }
  const double norm = jc + 2.0 * even_sum;
  return target / norm;
}

double bessel_zero(int order, int k) {
  if (order < 0 || k < 1) throw std::invalid_argument("oracles: bad Bessel zero request");
  const double beta = (static_cast<double>(k) + 0.5 * static_cast<double>(order) - 0.25) * M_PI;
  const double mu = 4.0 * static_cast<double>(order) * static_cast<double>(order);
  double guess = beta - (mu - 1.0) / (8.0 * beta) -
                 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * std::pow(8.0 * beta, 3));
  // McMahon drifts for large order and small k; zeros always exceed the order.
  guess = std::max(guess, static_cast<double>(order) + 1.0);

  auto f = [&](double x) { return bessel_j(order, x); };
  double half_width = 0.4;
  for (int attempt = 0; attempt < 12; ++attempt) {
    const double lo = std::max(guess - half_width, 1e-6);
    const double hi = guess + half_width;
    if ((f(lo) > 0.0) != (f(hi) > 0.0)) {
      return bisect(f, lo, hi);
    }
    half_width *= 1.7;
  }
  throw std::runtime_error("oracles: failed to bracket a Bessel zero");
}

OracleSpectrum disk_dirichlet_spectrum(double radius, int count) {
  if (!(radius > 0.0)) throw std::invalid_argument("oracles: disk radius must be positive");
  if (count < 1) throw std::invalid_argument("oracles: eigenvalue count must be positive");

  OracleSpectrum s;
  s.provenance = OracleProvenance::bessel;
  int expanded = 0;
  double cutoff = std::numeric_limits<double>::infinity();

  auto recompute_cutoff = [&]() {
    std::vector<double> vals = s.values();
    std::sort(vals.begin(), vals.end());
    if (static_cast<int>(vals.size()) >= count) cutoff = vals[count - 1];
  };

  for (int m = 0;; ++m) {
    const double first = bessel_zero(m, 1);
    const double lam1 = (first / radius) * (first / radius);
    if (expanded >= count && lam1 > cutoff) break;
    for (int k = 1;; ++k) {
      const double z = (k == 1) ? first : bessel_zero(m, k);
      const double lam = (z / radius) * (z / radius);
      if (expanded >= count && lam > cutoff) break;
      const int mult = (m == 0) ? 1 : 2;
      OracleEntry e;
      e.value = lam;
      e.multiplicity = mult;
      e.label = "(" + std::to_string(m) + "," + std::to_string(k) + ")";
      s.entries.push_back(std::move(e));
      expanded += mult;
      recompute_cutoff();
    }
  }
  sort_entries(s.entries);
  return s;
}

}  // namespace robinlab
