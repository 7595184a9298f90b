#pragma once
#include <complex>

#include <Eigen/Dense>

#include "cavitymc/params.hpp"

// Exact steady state of the driven atom-cavity master equation in a
// truncated photon basis.  Brute-force ground truth for the weak-drive
// analytic model; validation-only, so everything is dense and small.

namespace cavitymc {

struct OracleConfig {
  int n_max = 3;  // photon-number truncation, Hilbert dim = 2*(n_max+1)
  double g = 0.0;
  double delta_c = 0.0;
  double delta_a_eff = 0.0;
  double eta = 0.0;
  double gamma = mhz(3.0);
  double kappa = mhz(1.4);
};

struct OracleObservables {
  std::complex<double> mean_a;
  std::complex<double> mean_sigma;
  double photon_number = 0.0;     // <a† a>
  double excitation = 0.0;        // <sigma† sigma>
  double interaction_real = 0.0;  // Re <a† sigma>, feeds the force comparison
};

struct StateChecks {
  double hermiticity = 0.0;      // max |rho - rho†|
  double trace_deviation = 0.0;  // |tr rho - 1|
  double min_eigenvalue = 0.0;   // smallest eigenvalue of (rho+rho†)/2
  double residual = 0.0;         // ||L(rho)|| / max rate, scale-free
};

// Solves L(rho)=0 by a dense linear solve with the trace constraint
// replacing one row.  Throws ToleranceError if the Liouvillian null space is
// not one-dimensional or the returned state violates its invariants.
Eigen::MatrixXcd oracle_steady_state(const OracleConfig& cfg);

OracleObservables oracle_observables(const Eigen::MatrixXcd& rho,
                                     const OracleConfig& cfg);

StateChecks oracle_state_checks(const Eigen::MatrixXcd& rho,
                                const OracleConfig& cfg);

}  // namespace cavitymc
