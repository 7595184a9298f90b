#pragma once
#include <algorithm>
#include <cmath>
#include <complex>

#include "cavitymc/params.hpp"

// Pure, stateless mode geometry, coupling, steady-state response, forces and
// momentum diffusion.  Positions are measured from a probe-mode antinode on
// the cavity axis (x along the axis, y vertical, z transverse).

namespace cavitymc {

// Signed probe mode function, cos(kp x) * exp(-(y^2+z^2)/w0^2), in [-1, 1].
inline double probe_mode_value(const Vec3& r, const PhysicalParams& p) {
  const double rho2 = r.y * r.y + r.z * r.z;
  return std::cos(p.k_probe() * r.x) * std::exp(-rho2 / (p.waist * p.waist));
}

// Trap-mode intensity, cos^2(kt x) * exp(-2 rho^2 / w0^2), in [0, 1].  The
// trap standing wave shares the probe antinode at x=0 and decouples from it
// over half the cavity length.
inline double trap_mode_intensity(const Vec3& r, const PhysicalParams& p) {
  const double c = std::cos(p.k_trap() * r.x);
  const double rho2 = r.y * r.y + r.z * r.z;
  return c * c * std::exp(-2.0 * rho2 / (p.waist * p.waist));
}

// Position-dependent coupling magnitude g(r) = g0 |psi_p(r)|.
inline double coupling_at(const Vec3& r, const PhysicalParams& p) {
  return p.g0 * std::abs(probe_mode_value(r, p));
}

// Signed coupling g0 * psi_p(r); the sign is a gauge for scalar response but
// must be carried consistently through field evolution and gradients so the
// dipole force stays smooth across nodes.
inline double coupling_signed_at(const Vec3& r, const PhysicalParams& p) {
  return p.g0 * probe_mode_value(r, p);
}

// Gradient of the signed coupling.
inline Vec3 coupling_gradient(const Vec3& r, const PhysicalParams& p) {
  const double kp = p.k_probe();
  const double w2 = p.waist * p.waist;
  const double rho2 = r.y * r.y + r.z * r.z;
  const double envelope = std::exp(-rho2 / w2);
  const double psi = std::cos(kp * r.x) * envelope;
  Vec3 grad;
  grad.x = -p.g0 * kp * std::sin(kp * r.x) * envelope;
  grad.y = -2.0 * r.y / w2 * p.g0 * psi;
  grad.z = -2.0 * r.z / w2 * p.g0 * psi;
  return grad;
}

// Upward light shift of the atomic transition at r for a trap of peak depth
// trap_depth (J).  The effective probe-atom detuning at probe offset delta_c
// is delta_a_eff = delta_c + delta_a0 - stark_shift.
inline double stark_shift_at(const Vec3& r, double trap_depth,
                             const PhysicalParams& p) {
  return p.stark_per_depth * (trap_depth / kHbar) * trap_mode_intensity(r, p);
}

inline double delta_a_eff_at(const Vec3& r, double trap_depth, double delta_c,
                             const PhysicalParams& p) {
  return delta_c + p.delta_a0 - stark_shift_at(r, trap_depth, p);
}

// Weak-drive steady state of the coupled field-dipole system.
struct SteadyStateResponse {
  FieldState field;
  double transmission_rel = 1.0;  // |a|^2 / |a_empty|^2 at the same detuning
  double photon_number = 0.0;     // |a|^2
  double excitation = 0.0;        // |sigma|^2
};

inline SteadyStateResponse weak_drive_steady_state(double g, double delta_c,
                                                   double delta_a_eff,
                                                   double eta,
                                                   const PhysicalParams& p) {
  using namespace std::complex_literals;
  SteadyStateResponse out;
  const std::complex<double> dc(p.kappa, -delta_c);
  const std::complex<double> da(p.gamma, -delta_a_eff);
  if (g == 0.0) {
    out.field.a = eta / dc;
    out.field.sigma = 0.0;
    out.transmission_rel = 1.0;
  } else {
    out.field.a = eta * da / (dc * da + g * g);
    out.field.sigma = -1i * g * out.field.a / da;
    const std::complex<double> a_empty = eta / dc;
    out.transmission_rel = std::norm(out.field.a) / std::norm(a_empty);
  }
  out.photon_number = std::norm(out.field.a);
  out.excitation = std::norm(out.field.sigma);
  return out;
}

// Probe detunings of the two dressed modes for coupling g and atom-cavity
// detuning delta_ac = (effective atom frequency) - (cavity frequency);
// first = lower mode, second = upper mode.
inline std::pair<double, double> dressed_mode_frequencies(double g,
                                                          double delta_ac) {
  const double root = std::sqrt(g * g + 0.25 * delta_ac * delta_ac);
  return {0.5 * delta_ac - root, 0.5 * delta_ac + root};
}

// Dipole force on the atom from the probe field, -2 hbar Re(a* sigma) grad g.
inline Vec3 probe_dipole_force(const Vec3& r, const FieldState& f,
                               const PhysicalParams& p) {
  const double factor =
      -2.0 * kHbar * (f.a.real() * f.sigma.real() + f.a.imag() * f.sigma.imag());
  return factor * coupling_gradient(r, p);
}

// Trap potential U(r) = -depth * I_trap(r) and its force -grad U.
inline double trap_potential(const Vec3& r, double trap_depth,
                             const PhysicalParams& p) {
  return -trap_depth * trap_mode_intensity(r, p);
}

inline Vec3 trap_intensity_gradient(const Vec3& r, const PhysicalParams& p) {
  const double kt = p.k_trap();
  const double w2 = p.waist * p.waist;
  const double rho2 = r.y * r.y + r.z * r.z;
  const double envelope = std::exp(-2.0 * rho2 / w2);
  const double c = std::cos(kt * r.x);
  const double intensity = c * c * envelope;
  Vec3 grad;
  grad.x = -kt * std::sin(2.0 * kt * r.x) * envelope;
  grad.y = -4.0 * r.y / w2 * intensity;
  grad.z = -4.0 * r.z / w2 * intensity;
  return grad;
}

inline Vec3 trap_force(const Vec3& r, double trap_depth,
                       const PhysicalParams& p) {
  return trap_depth * trap_intensity_gradient(r, p);  // -grad U
}

// Photon scattering rate into free space, 2 gamma |sigma|^2.
inline double scattering_rate(const FieldState& f, const PhysicalParams& p) {
  return 2.0 * p.gamma * std::norm(f.sigma);
}

// Momentum diffusion along the cavity axis from dipole-force fluctuations.
inline double dipole_diffusion(const Vec3& r, const FieldState& f,
                               double delta_a_eff, const PhysicalParams& p) {
  const Vec3 grad = coupling_gradient(r, p);
  const double grad2 = grad.norm2();
  const double denom = p.gamma * p.gamma + delta_a_eff * delta_a_eff;
  return 2.0 * kHbar * kHbar * grad2 * std::norm(f.a) * p.gamma / denom;
}

// Critical photon and atom numbers of the cavity QED system.
struct CriticalNumbers {
  double n0 = 0.0;  // saturation photon number, gamma^2 / (2 g0^2)
  double N0 = 0.0;  // critical atom number, 2 kappa gamma / g0^2
};

inline CriticalNumbers critical_numbers(const PhysicalParams& p) {
  CriticalNumbers c;
  c.n0 = p.gamma * p.gamma / (2.0 * p.g0 * p.g0);
  c.N0 = 2.0 * p.kappa * p.gamma / (p.g0 * p.g0);
  return c;
}

// Small-oscillation trap frequencies at an antinode.
inline double axial_trap_frequency(double trap_depth, const PhysicalParams& p) {
  return p.k_trap() * std::sqrt(2.0 * trap_depth / p.atom_mass);
}

inline double radial_trap_frequency(double trap_depth,
                                    const PhysicalParams& p) {
  return 2.0 / p.waist * std::sqrt(trap_depth / p.atom_mass);
}

}  // namespace cavitymc
