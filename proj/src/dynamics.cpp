#include "cavitymc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "cavitymc/errors.hpp"
#include "cavitymc/rng.hpp"

namespace cavitymc {
namespace {

using Cplx = std::complex<double>;

constexpr double kExcitationHardLimit = 0.05;  // aborts a protocol run
constexpr double kExcitationModelLimit = 0.5;  // weak-excitation model domain

// Exact solution over dt of v' = M v + (eta, 0) with
// M = [[i dc - kappa, -i g], [-i g, i da - gamma]]:
// v(dt) = v_ss + exp(M dt) (v - v_ss).  exp(M dt) is evaluated from the
// eigen-decomposition written as e^{mu dt}[cosh(D dt) I + sinh(D dt)/D (M - mu I)]
// with mu = tr M / 2, D = sqrt(mu^2 - det M); series for small |D dt|.
FieldState propagate_field(const FieldState& f, double g, double dc, double da,
                           double eta, double kappa, double gamma, double dt) {
  const Cplx m11(-kappa, dc);
  const Cplx m22(-gamma, da);
  const Cplx off(0.0, -g);
  const Cplx det = m11 * m22 + g * g;
  const Cplx a_ss = -m22 * (eta / det);
  const Cplx s_ss = off * (eta / det);

  const Cplx mu = 0.5 * (m11 + m22);
  const Cplx dhalf = 0.5 * (m11 - m22);
  const Cplx disc = std::sqrt(dhalf * dhalf + off * off);  // mu^2 - det
  const Cplx x = disc * dt;
  Cplx ch, sh_over;  // cosh(x), sinh(x)/disc
  if (std::norm(x) < 1e-8) {
    const Cplx x2 = x * x;
    ch = 1.0 + x2 * (0.5 + x2 / 24.0);
    sh_over = dt * (1.0 + x2 * (1.0 / 6.0 + x2 / 120.0));
  } else {
    const Cplx ex = std::exp(x);
    const Cplx exm = 1.0 / ex;
    ch = 0.5 * (ex + exm);
    sh_over = 0.5 * (ex - exm) / disc;
  }
  const Cplx emu = std::exp(mu * dt);
  const Cplx e11 = emu * (ch + sh_over * dhalf);
  const Cplx e22 = emu * (ch - sh_over * dhalf);
  const Cplx e12 = emu * sh_over * off;

  const Cplx da0 = f.a - a_ss;
  const Cplx ds0 = f.sigma - s_ss;
  FieldState out;
  out.a = a_ss + e11 * da0 + e12 * ds0;
  out.sigma = s_ss + e12 * da0 + e22 * ds0;
  return out;
}

Vec3 random_unit_vector(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double a, b, s;
  do {
    a = u(rng);
    b = u(rng);
    s = a * a + b * b;
  } while (s >= 1.0 || s == 0.0);
  const double root = 2.0 * std::sqrt(1.0 - s);
  return {a * root, b * root, 1.0 - 2.0 * s};
}

// Trig/envelope bundle shared by force, coupling and Stark evaluations.
struct LocalMode {
  Vec3 grad_i;          // gradient of the trap intensity
  double intensity;     // trap intensity in [0, 1]
  double g_signed;      // signed coupling g0 psi_p
  Vec3 grad_g;          // gradient of the signed coupling
  double grad_g2;       // |grad_g|^2

  static LocalMode at(const Vec3& r, const PhysicalParams& p, bool probe_on) {
    LocalMode m;
    const double w2 = p.waist * p.waist;
    const double rho2 = r.y * r.y + r.z * r.z;
    const double env_p = std::exp(-rho2 / w2);  // probe envelope
    const double env_t = env_p * env_p;         // trap envelope
    const double kt = p.k_trap();
    const double ct = std::cos(kt * r.x);
    const double s2t = std::sin(2.0 * kt * r.x);
    m.intensity = ct * ct * env_t;
    m.grad_i.x = -kt * s2t * env_t;
    m.grad_i.y = -4.0 * r.y / w2 * m.intensity;
    m.grad_i.z = -4.0 * r.z / w2 * m.intensity;
    if (probe_on) {
      const double kp = p.k_probe();
      const double cp = std::cos(kp * r.x);
      const double sp = std::sin(kp * r.x);
      m.g_signed = p.g0 * cp * env_p;
      m.grad_g.x = -p.g0 * kp * sp * env_p;
      m.grad_g.y = -2.0 * r.y / w2 * m.g_signed;
      m.grad_g.z = -2.0 * r.z / w2 * m.g_signed;
      m.grad_g2 = m.grad_g.norm2();
    } else {
      m.g_signed = 0.0;
      m.grad_g = {};
      m.grad_g2 = 0.0;
    }
    return m;
  }
};

}  // namespace

FieldState field_update(const FieldState& f, double g_signed, double delta_c,
                        double delta_a_eff, double eta, double kappa,
                        double gamma, double dt) {
  FieldState out =
      propagate_field(f, g_signed, delta_c, delta_a_eff, eta, kappa, gamma, dt);
  if (std::norm(out.sigma) > kExcitationModelLimit)
    throw ModelValidityError(
        "atomic excitation left the weak-excitation domain (|sigma|^2 > 0.5)");
  return out;
}

void motion_step(ParticleState& state, double trap_depth, double dt,
                 const PhysicalParams& p) {
  const Vec3 gravity{0.0, -p.atom_mass * kGravity, 0.0};
  auto force = [&](const Vec3& r) {
    return trap_force(r, trap_depth, p) +
           probe_dipole_force(r, state.field, p) + gravity;
  };
  state.p += 0.5 * dt * force(state.r);
  state.r += (dt / p.atom_mass) * state.p;
  state.p += 0.5 * dt * force(state.r);
  state.t += dt;
}

void stochastic_kick(ParticleState& state, double dt, double delta_a_eff,
                     HeatingBudget& budget, std::mt19937_64& rng,
                     const PhysicalParams& p) {
  const double inv2m = 0.5 / p.atom_mass;
  const double rate = scattering_rate(state.field, p);
  if (rate > 0.0) {
    std::poisson_distribution<int> poisson(rate * dt);
    const int n = poisson(rng);
    const double hk = p.recoil_momentum();
    for (int i = 0; i < n; ++i) {
      const Vec3 dp = hk * random_unit_vector(rng);
      budget.spont_recoil += (2.0 * state.p.dot(dp) + dp.norm2()) * inv2m;
      state.p += dp;
    }
  }
  const double diff = dipole_diffusion(state.r, state.field, delta_a_eff, p);
  if (diff > 0.0) {
    std::normal_distribution<double> n01;
    const double dpx = n01(rng) * std::sqrt(2.0 * diff * dt);
    budget.dipole_fluct += (2.0 * state.p.x * dpx + dpx * dpx) * inv2m;
    state.p.x += dpx;
  }
}

void trap_noise_step(TrapNoiseProcess& proc, double dt, std::mt19937_64& rng) {
  if (proc.sigma_eps <= 0.0) return;
  proc.clock -= dt;
  if (proc.clock <= 0.0) {
    std::normal_distribution<double> n01;
    proc.current_eps = std::max(-1.0, proc.sigma_eps * n01(rng));
    proc.clock += proc.tau_noise;
    if (proc.clock <= 0.0) proc.clock = proc.tau_noise;
  }
}

double mechanical_energy(const ParticleState& state, double trap_depth,
                         const PhysicalParams& p) {
  return state.p.norm2() / (2.0 * p.atom_mass) +
         trap_potential(state.r, trap_depth, p) +
         p.atom_mass * kGravity * state.r.y;
}

SegmentSummary simulate_segment(ParticleState& state, double duration,
                                const DriveSettings& drive, double trap_depth,
                                TrapNoiseProcess& noise, HeatingBudget& budget,
                                const IntegratorConfig& cfg,
                                const PhysicalParams& p,
                                std::mt19937_64& rng) {
  if (!(duration > 0.0)) throw ConfigError("segment duration must be positive");
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be positive");
  const bool probe_on = drive.active();
  if (probe_on) {
    // Field sub-steps are exact; the guard bounds the error of freezing the
    // coupling over one step.
    if (cfg.dt * std::max({p.g0, p.kappa, p.gamma}) > 0.25)
      throw ConfigError("dt too large for coupled field-motion stepping");
  } else if (trap_depth > 0.0 &&
             cfg.dt * axial_trap_frequency(trap_depth, p) > 0.05) {
    throw ConfigError("dt too large for trap-motion stepping");
  }
  const int stride = std::max(1, cfg.record_stride);

  SegmentSummary out;
  if (!probe_on) state.field = FieldState{};  // no stored photons without drive

  const double dt = cfg.dt;
  const double inv_m = 1.0 / p.atom_mass;
  const double inv2m = 0.5 * inv_m;
  const Vec3 gravity{0.0, -p.atom_mass * kGravity, 0.0};
  const double empty_photon =
      probe_on ? drive.eta * drive.eta /
                     (p.kappa * p.kappa + drive.delta_c * drive.delta_c)
               : 0.0;
  const double x_escape = 20.0 * p.lambda_trap;
  const double w0_sq4 = 4.0 * p.waist * p.waist;
  const double fold_period = 0.5 * p.lambda_trap;

  const long long n_steps = std::llround(duration / dt);
  if (n_steps < 1) throw ConfigError("segment shorter than one step");

  double sum_photon = 0.0, sum_coupling = 0.0;

  // Force decomposition at the current position/field, cached across steps.
  LocalMode mode = LocalMode::at(state.r, p, probe_on);
  auto depth_inst = [&]() {
    return trap_depth * std::max(0.0, 1.0 + noise.current_eps);
  };
  auto dipole_factor = [&]() {
    return -2.0 * kHbar *
           (state.field.a.real() * state.field.sigma.real() +
            state.field.a.imag() * state.field.sigma.imag());
  };
  Vec3 f_trap = trap_depth * mode.grad_i;
  Vec3 f_noise = (depth_inst() - trap_depth) * mode.grad_i;
  Vec3 f_dip = probe_on ? dipole_factor() * mode.grad_g : Vec3{};
  Vec3 f_total = f_trap + f_noise + f_dip + gravity;

  for (long long step = 1; step <= n_steps; ++step) {
    const Vec3 f_dip_old = f_dip;
    const Vec3 f_noise_old = f_noise;
    const Vec3 f_old = f_total;

    // Half kick, half drift.
    state.p += (0.5 * dt) * f_old;
    const Vec3 p_half = state.p;
    state.r += (0.5 * dt * inv_m) * state.p;

    // Field propagation with coefficients frozen at the midpoint.
    double delta_a_mid = 0.0;
    if (probe_on) {
      mode = LocalMode::at(state.r, p, true);
      delta_a_mid = drive.delta_c + p.delta_a0 -
                    p.stark_per_depth * (depth_inst() / kHbar) * mode.intensity;
      state.field =
          propagate_field(state.field, mode.g_signed, drive.delta_c,
                          delta_a_mid, drive.eta, p.kappa, p.gamma, dt);
      const double exc = std::norm(state.field.sigma);
      if (exc > out.max_excitation) out.max_excitation = exc;
      if (exc > kExcitationHardLimit)
        throw ModelValidityError(
            "atomic excitation exceeded the protocol hard limit "
            "(|sigma|^2 > 0.05)");
    }

    // Second half drift, new forces, half kick.
    state.r += (0.5 * dt * inv_m) * state.p;
    mode = LocalMode::at(state.r, p, probe_on);
    f_trap = trap_depth * mode.grad_i;
    f_noise = (depth_inst() - trap_depth) * mode.grad_i;
    f_dip = probe_on ? dipole_factor() * mode.grad_g : Vec3{};
    f_total = f_trap + f_noise + f_dip + gravity;
    state.p += (0.5 * dt) * f_total;
    state.t += dt;

    // Work bookkeeping with the exact discrete mid-velocity, so that summed
    // channel work equals the kinetic-energy change of the deterministic
    // kicks identically.
    const Vec3 v_mid = (p_half + (0.25 * dt) * (f_total - f_old)) * inv_m;
    budget.probe_work += 0.5 * dt * (f_dip_old + f_dip).dot(v_mid);
    budget.trap_noise += 0.5 * dt * (f_noise_old + f_noise).dot(v_mid);

    // Stochastic kicks from the end-of-step field and position.
    if (probe_on) {
      const double rate_dt = 2.0 * p.gamma * std::norm(state.field.sigma) * dt;
      if (rate_dt > 0.0) {
        std::poisson_distribution<int> poisson(rate_dt);
        const int n = poisson(rng);
        if (n > 0) {
          const double hk = p.recoil_momentum();
          for (int i = 0; i < n; ++i) {
            const Vec3 dp = hk * random_unit_vector(rng);
            budget.spont_recoil += (2.0 * state.p.dot(dp) + dp.norm2()) * inv2m;
            state.p += dp;
          }
        }
      }
      const double delta_a_end =
          drive.delta_c + p.delta_a0 -
          p.stark_per_depth * (depth_inst() / kHbar) * mode.intensity;
      const double diff = 2.0 * kHbar * kHbar * mode.grad_g2 *
                          std::norm(state.field.a) * p.gamma /
                          (p.gamma * p.gamma + delta_a_end * delta_a_end);
      if (diff > 0.0) {
        std::normal_distribution<double> n01;
        const double dpx = n01(rng) * std::sqrt(2.0 * diff * dt);
        budget.dipole_fluct += (2.0 * state.p.x * dpx + dpx * dpx) * inv2m;
        state.p.x += dpx;
      }
    }

    // Trap-depth noise resampling invalidates the cached noise force.
    if (noise.sigma_eps > 0.0) {
      noise.clock -= dt;
      if (noise.clock <= 0.0) {
        std::normal_distribution<double> n01;
        noise.current_eps = std::max(-1.0, noise.sigma_eps * n01(rng));
        noise.clock += noise.tau_noise;
        if (noise.clock <= 0.0) noise.clock = noise.tau_noise;
        f_noise = (depth_inst() - trap_depth) * mode.grad_i;
        f_total = f_trap + f_noise + f_dip + gravity;
      }
    }

    // Statistics and loss check on the sampling stride.
    if (step % stride == 0) {
      ++out.n_samples;
      if (probe_on) {
        sum_photon += std::norm(state.field.a);
        sum_coupling += std::abs(mode.g_signed);
      } else {
        sum_coupling += coupling_at(state.r, p);
      }
      const double folded = std::remainder(state.r.x, fold_period);
      int bin = int((folded / fold_period + 0.5) * kAxialBins);
      out.axial_hist[std::clamp(bin, 0, kAxialBins - 1)]++;

      const double rho2 = state.r.y * state.r.y + state.r.z * state.r.z;
      const bool outbound = state.r.y * state.p.y + state.r.z * state.p.z > 0.0;
      const double energy = state.p.norm2() * inv2m -
                            trap_depth * mode.intensity +
                            p.atom_mass * kGravity * state.r.y;
      if ((energy > 0.0 && outbound && rho2 > w0_sq4) ||
          std::abs(state.r.x) > x_escape) {
        out.exited = true;
        out.exposure = double(step) * dt;
        break;
      }
    }
  }

  if (!out.exited) out.exposure = double(n_steps) * dt;
  if (out.n_samples > 0) {
    out.mean_photon = sum_photon / double(out.n_samples);
    out.mean_coupling = sum_coupling / double(out.n_samples);
  }
  out.mean_transmission_rel =
      probe_on && empty_photon > 0.0 ? out.mean_photon / empty_photon : 1.0;
  return out;
}

double probe_free_mean_storage_time(double sigma_eps,
                                    const CalibrationFixture& fixture,
                                    const PhysicalParams& p) {
  IntegratorConfig cfg;
  cfg.dt = fixture.dt;
  cfg.record_stride = 100;
  DriveSettings off;
  off.enabled = false;
  off.eta = 0.0;

  const double om_ax = axial_trap_frequency(fixture.trap_depth, p);
  const double om_rad = radial_trap_frequency(fixture.trap_depth, p);
  const double sigma_p = std::sqrt(p.atom_mass * kBoltzmann * fixture.init_temperature);
  const double sigma_x = sigma_p / (p.atom_mass * om_ax);
  const double sigma_r = sigma_p / (p.atom_mass * om_rad);

  double total = 0.0;
  for (int i = 0; i < fixture.n_trajectories; ++i) {
    // Common random numbers across sigma_eps values keep the calibration
    // objective smooth and monotone.
    auto rng = make_stream(fixture.seed, std::uint64_t(i));
    std::normal_distribution<double> n01;
    ParticleState st;
    st.r = {sigma_x * n01(rng), sigma_r * n01(rng), sigma_r * n01(rng)};
    st.p = {sigma_p * n01(rng), sigma_p * n01(rng), sigma_p * n01(rng)};
    TrapNoiseProcess noise;
    noise.sigma_eps = sigma_eps;
    noise.tau_noise = fixture.tau_noise;
    HeatingBudget budget;

    double t = 0.0;
    while (t < fixture.max_time) {
      const double chunk = std::min(1e-3, fixture.max_time - t);
      SegmentSummary seg = simulate_segment(st, chunk, off, fixture.trap_depth,
                                            noise, budget, cfg, p, rng);
      t += seg.exposure;
      if (seg.exited) break;
    }
    total += t;
  }
  return total / double(fixture.n_trajectories);
}

double calibrate_trap_noise(double target_lifetime,
                            const CalibrationFixture& fixture,
                            const PhysicalParams& p) {
  if (!(target_lifetime > 0.0))
    throw CalibrationError("target lifetime must be positive");
  if (target_lifetime > 0.5 * fixture.max_time)
    throw CalibrationError(
        "target lifetime too close to the trajectory cap; raise max_time");

  const double base = probe_free_mean_storage_time(0.0, fixture, p);
  if (base < target_lifetime)
    throw CalibrationError(
        "cannot bracket: noise-free storage time is already below the "
        "target, another loss channel dominates");

  double lo = 0.0;  // lifetime(lo) >= target
  double hi = 0.05;
  double t_hi = probe_free_mean_storage_time(hi, fixture, p);
  int grow = 0;
  while (t_hi >= target_lifetime) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 6)
      throw CalibrationError("cannot bracket: storage time stays above the "
                             "target for sigma_eps up to 3.2");
    t_hi = probe_free_mean_storage_time(hi, fixture, p);
  }
  for (int it = 0; it < 16; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double t_mid = probe_free_mean_storage_time(mid, fixture, p);
    if (std::abs(t_mid - target_lifetime) <= 0.1 * target_lifetime) return mid;
    (t_mid > target_lifetime ? lo : hi) = mid;
  }
  throw CalibrationError("bisection did not reach the target within 16 steps");
}

}  // namespace cavitymc
