#pragma once
#include <cmath>
#include <complex>
#include <numbers>

#include "cavitymc/errors.hpp"

namespace cavitymc {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kHbar = 1.0545718e-34;      // J s
inline constexpr double kBoltzmann = 1.380649e-23;  // J/K
inline constexpr double kGravity = 9.81;            // m/s^2, along -y

// Angular frequency from a linear frequency given in MHz.
constexpr double mhz(double f) { return kTwoPi * f * 1e6; }

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend Vec3 operator*(double s, Vec3 v) { return v *= s; }
  friend Vec3 operator*(Vec3 v, double s) { return v *= s; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
};

// Fixed physical parameters of the atom-cavity system.  All frequencies are
// angular (rad/s), lengths in m, energies in J, masses in kg.
struct PhysicalParams {
  double g0 = mhz(16.0);            // peak atom-cavity coupling
  double gamma = mhz(3.0);          // atomic dipole (amplitude) decay
  double kappa = mhz(1.4);          // cavity field decay
  double lambda_probe = 780.2e-9;   // probe/coupling mode wavelength
  double lambda_trap = 785.3e-9;    // intracavity trap wavelength
  double waist = 29e-6;             // mode waist (1/e^2 field radius)
  double cavity_length = 122e-6;    // mirror separation
  double atom_mass = 1.40999e-25;   // 85Rb
  double delta_a0 = mhz(35.0);      // bare probe-atom detuning wp - wa; the
                                    // unshifted atom sits below the probe
  // Light shift of the atomic transition per unit trap depth: a full trap of
  // depth kB*1.6 mK shifts the transition up by 2pi*35 MHz.
  double stark_per_depth = mhz(35.0) / (kBoltzmann * 1.6e-3 / kHbar);

  double k_probe() const { return kTwoPi / lambda_probe; }
  double k_trap() const { return kTwoPi / lambda_trap; }
  double recoil_momentum() const { return kHbar * k_probe(); }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(std::string("parameter must be positive: ") + name);
    };
    positive(g0, "g0");
    positive(gamma, "gamma");
    positive(kappa, "kappa");
    positive(lambda_probe, "lambda_probe");
    positive(lambda_trap, "lambda_trap");
    positive(waist, "waist");
    positive(cavity_length, "cavity_length");
    positive(atom_mass, "atom_mass");
    positive(stark_per_depth, "stark_per_depth");
    if (!std::isfinite(delta_a0)) throw ConfigError("delta_a0 must be finite");
    if (waist > cavity_length)
      throw ConfigError("waist exceeds cavity length");
  }
};

// Intracavity field amplitude and atomic coherence in the rotating frame.
struct FieldState {
  std::complex<double> a{0.0, 0.0};      // cavity field  <a>
  std::complex<double> sigma{0.0, 0.0};  // atomic dipole <sigma->
};

}  // namespace cavitymc
