#include <doctest.h>

#include <cmath>
#include <complex>

#include "cavitymc/oracle.hpp"
#include "cavitymc/physics.hpp"

using namespace cavitymc;

namespace {

const PhysicalParams P{};

OracleConfig make_cfg(double g, double dc, double da, double n_empty,
                      int n_max = 3) {
  OracleConfig oc;
  oc.n_max = n_max;
  oc.g = g;
  oc.delta_c = dc;
  oc.delta_a_eff = da;
  oc.eta = P.kappa * std::sqrt(n_empty);
  oc.gamma = P.gamma;
  oc.kappa = P.kappa;
  return oc;
}

double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(std::fabs(want), 1e-300);
}

}  // namespace

TEST_CASE("steady state satisfies its invariants") {
  const auto cfg = make_cfg(P.g0, mhz(5.0), mhz(-3.0), 1e-3);
  const auto rho = oracle_steady_state(cfg);
  const auto checks = oracle_state_checks(rho, cfg);
  CHECK(checks.hermiticity < 1e-12);
  CHECK(checks.trace_deviation < 1e-12);
  CHECK(checks.min_eigenvalue > -1e-12);
  CHECK(checks.residual < 1e-9);
}

TEST_CASE("undriven cavity relaxes to the vacuum") {
  const auto cfg = make_cfg(P.g0, 0.0, 0.0, 0.0);
  const auto rho = oracle_steady_state(cfg);
  const auto obs = oracle_observables(rho, cfg);
  CHECK(std::fabs(obs.photon_number) < 1e-14);
  CHECK(std::fabs(obs.excitation) < 1e-14);
  CHECK(std::abs(obs.mean_a) < 1e-12);
  CHECK(std::fabs(rho(0, 0).real() - 1.0) < 1e-12);  // ground state |g,0>
}

TEST_CASE("empty cavity matches the driven-oscillator closed form") {
  for (double dc : {0.0, mhz(2.0), mhz(-14.0)}) {
    const auto cfg = make_cfg(0.0, dc, 0.0, 1e-4);
    const auto obs = oracle_observables(oracle_steady_state(cfg), cfg);
    const double expect =
        cfg.eta * cfg.eta / (P.kappa * P.kappa + dc * dc);
    CHECK(rel_err(obs.photon_number, expect) < 1e-8);
    // Coherent-state amplitude eta / (kappa - i dc).
    const std::complex<double> a_exp =
        cfg.eta / std::complex<double>(P.kappa, -dc);
    CHECK(std::abs(obs.mean_a - a_exp) < 1e-8 * std::abs(a_exp));
  }
}

TEST_CASE("weak-drive model converges to the oracle as the drive shrinks") {
  // The analytic model is the first-order-in-photon-number limit; its error
  // against the exact state must scale down linearly with drive power.
  const double g = P.g0;
  const double dc = mhz(-15.6);
  const double da = mhz(-2.2);  // transmission-dip region, worst case
  double prev = 0.0;
  double first = 0.0;
  for (double n_empty : {1e-2, 1e-3, 1e-4}) {
    const auto cfg = make_cfg(g, dc, da, n_empty);
    const auto obs = oracle_observables(oracle_steady_state(cfg), cfg);
    const auto model = weak_drive_steady_state(g, dc, da, cfg.eta, P);
    const double err = rel_err(obs.photon_number, model.photon_number);
    if (n_empty == 1e-2) first = err;
    if (prev > 0.0) {
      CHECK(err < prev);
      CHECK(err == doctest::Approx(prev / 10.0).epsilon(0.25));
    }
    prev = err;
  }
  CHECK(first < 0.1);
  CHECK(prev < 1e-3);
}

TEST_CASE("model agrees with the oracle over the scan plane") {
  double worst = 0.0;
  for (double g : {0.0, 0.5 * P.g0, P.g0}) {
    for (int i = -3; i <= 3; ++i) {
      for (int j = -3; j <= 3; ++j) {
        const double dc = mhz(20.0 / 3.0 * i);
        const double da = mhz(20.0 / 3.0 * j);
        const auto cfg = make_cfg(g, dc, da, 1e-4);
        const auto obs = oracle_observables(oracle_steady_state(cfg), cfg);
        const auto model = weak_drive_steady_state(g, dc, da, cfg.eta, P);
        worst = std::max(worst, rel_err(obs.photon_number,
                                        model.photon_number));
        worst = std::max(worst, std::abs(obs.mean_a - model.field.a) /
                                    std::max(std::abs(model.field.a), 1e-12));
        if (g > 0.0)
          worst = std::max(worst,
                           rel_err(obs.excitation, model.excitation));
      }
    }
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("truncation is converged at the working drive") {
  const auto c3 = make_cfg(P.g0, mhz(16.0), mhz(16.0), 1e-3, 3);
  const auto c4 = make_cfg(P.g0, mhz(16.0), mhz(16.0), 1e-3, 4);
  const auto o3 = oracle_observables(oracle_steady_state(c3), c3);
  const auto o4 = oracle_observables(oracle_steady_state(c4), c4);
  CHECK(rel_err(o3.photon_number, o4.photon_number) < 1e-6);
  CHECK(rel_err(o3.excitation, o4.excitation) < 1e-6);
}

TEST_CASE("interaction term matches the model quadrature product") {
  // Re <a† sigma> drives the dipole force; on resonance it vanishes, detuned
  // it goes over to Re(conj(a) sigma) of the analytic fields.
  const auto on = make_cfg(P.g0, 0.0, 0.0, 1e-4);
  const auto obs_on = oracle_observables(oracle_steady_state(on), on);
  CHECK(std::fabs(obs_on.interaction_real) < 1e-12);

  const double da = mhz(8.0);
  const auto off = make_cfg(P.g0, mhz(3.0), da, 1e-4);
  const auto obs = oracle_observables(oracle_steady_state(off), off);
  const auto model = weak_drive_steady_state(P.g0, mhz(3.0), da, off.eta, P);
  const double model_int = (std::conj(model.field.a) * model.field.sigma).real();
  CHECK(obs.interaction_real ==
        doctest::Approx(model_int).epsilon(5e-3));
}

TEST_CASE("n_max below one photon is rejected") {
  auto cfg = make_cfg(P.g0, 0.0, 0.0, 1e-4);
  cfg.n_max = 0;
  CHECK_THROWS_AS(oracle_steady_state(cfg), ConfigError);
}
