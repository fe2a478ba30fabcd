// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ROBINLAB_ORACLES_HPP
#define ROBINLAB_ORACLES_HPP

#include <string>
#include <vector>

namespace robinlab {

// Closed-form and semi-analytic reference spectra, independent of the finite
// element pipeline. Root finding is bracketed bisection throughout; no value
// here touches assembled matrices.

enum class OracleProvenance { closed_form, transcendental, bessel };

struct OracleEntry {
  double value = 0.0;
  int multiplicity = 1;
  std::string label;  // mode identifier, e.g. "(p,q)" or "(m,k)"
};

struct OracleSpectrum {
  std::vector<OracleEntry> entries;  // ascending by value
  OracleProvenance provenance = OracleProvenance::closed_form;
  // Values expanded by multiplicity, ascending.
  std::vector<double> values() const;
};

// Eigenvalues of -u'' on (0, L) with u'(0) = theta u(0), -u'(L) = theta u(L),
// the 1D section of the constant-coefficient Robin problem. Positive
// eigenvalues mu = k^2 solve (theta^2 - k^2) sin(kL) + 2 theta k cos(kL) = 0
// with one root per bracket (m pi/L, (m+1) pi/L); for theta < 0 up to two
// nonpositive eigenvalues mu = -k^2 come from the hyperbolic counterpart.
// mu = 0 occurs exactly at theta = 0 and theta = -2/L.
OracleSpectrum robin_1d(double theta, double length, int count);

// Characteristic functions whose sign changes locate the spectrum above;
// exposed so tests can assert the root certificates directly.
double robin_1d_secular_positive(double k, double theta, double length);
double robin_1d_secular_negative(double k, double theta, double length);

struct RectangleBC {
  enum class Kind { dirichlet, neumann, robin } kind = Kind::dirichlet;
  double theta = 0.0;

  static RectangleBC dirichlet() { return {Kind::dirichlet, 0.0}; }
  static RectangleBC neumann() { return {Kind::neumann, 0.0}; }
  static RectangleBC robin(double theta) { return {Kind::robin, theta}; }
};

// Separated spectrum of the rectangle (0,a) x (0,b): sums of 1D eigenvalues,
// labels "(p,q)" with the 1D mode indices.
OracleSpectrum rectangle_spectrum(double a, double b, const RectangleBC& bc, int count);

// Bessel function of the first kind, integer order: ascending series for
// x <= 12, otherwise downward recurrence normalized by the Neumann sum
// J_0 + 2 sum J_{2k} = 1.
double bessel_j(int order, double x);

// k-th positive zero of J_order, McMahon initial guess plus bisection.
double bessel_zero(int order, int k);

// Dirichlet disk spectrum (j_{m,k}/R)^2, multiplicity two for m >= 1,
// labels "(m,k)".
OracleSpectrum disk_dirichlet_spectrum(double radius, int count);

}  // namespace robinlab

#endif
