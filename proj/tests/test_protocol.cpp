#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cavitymc/protocol.hpp"
#include "cavitymc/rng.hpp"

using namespace cavitymc;

namespace {

const PhysicalParams P{};

IntegratorConfig fast_integ() {
  IntegratorConfig c;
  c.dt = 2e-9;
  c.record_stride = 50;
  return c;
}

IntervalRecord make_rec(IntervalKind kind, double t_rel, double end) {
  IntervalRecord r;
  r.kind = kind;
  r.mean_transmission_rel = t_rel;
  r.end = end;
  return r;
}

}  // namespace

TEST_CASE("fountain injection stays inside its launch window") {
  auto rng = make_stream(1, 0);
  for (int i = 0; i < 500; ++i) {
    const ParticleState st = sample_initial_atom(rng, P);
    CHECK(std::fabs(st.r.x) <= 5.0 * P.lambda_probe);
    CHECK(st.r.y == -2.0 * P.waist);
    CHECK(std::fabs(st.r.z) <= 0.5 * P.waist);
    const double vy = st.p.y / P.atom_mass;
    CHECK(vy >= 0.03);
    CHECK(vy <= 0.10);
    CHECK(std::fabs(st.p.x / P.atom_mass) < 0.06);
    CHECK(std::fabs(st.p.z / P.atom_mass) < 0.06);
    CHECK(st.t == 0.0);
  }
}

TEST_CASE("detector counts") {
  TriggerConfig trig;
  auto rng = make_stream(2, 0);

  SUBCASE("shot noise off rounds the expectation") {
    trig.use_shot_noise = false;
    // q.e. * 2 kappa * bin * 0.05 photons.
    CHECK(detect_counts(0.05, P.kappa, trig, rng) == 3);
    CHECK(detect_counts(0.0, P.kappa, trig, rng) == 0);
    CHECK(detect_counts(0.001, P.kappa, trig, rng) == 0);
  }

  SUBCASE("shot noise on draws Poisson with the right mean") {
    trig.use_shot_noise = true;
    const double expect = trig.quantum_efficiency * 2.0 * P.kappa * 0.05 *
                          trig.bin_time;
    CHECK(expect == doctest::Approx(2.8148670176164545).epsilon(1e-12));
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i)
      sum += double(detect_counts(0.05, P.kappa, trig, rng));
    CHECK(sum / n == doctest::Approx(expect).epsilon(0.02));
  }

  SUBCASE("bad bin time is rejected") {
    trig.bin_time = 0.0;
    CHECK_THROWS_AS(detect_counts(0.05, P.kappa, trig, rng), ConfigError);
  }
}

TEST_CASE("trigger phase") {
  ProtocolConfig cfg;
  const IntegratorConfig integ = fast_integ();

  SUBCASE("a cold atom at the antinode fires the first bin") {
    cfg.trigger.use_shot_noise = false;
    ParticleState st;  // at rest at the origin
    TrapNoiseProcess noise;
    HeatingBudget budget;
    auto rng = make_stream(3, 0);
    const auto out = run_trigger_phase(st, cfg, integ, noise, budget, P, rng);
    CHECK(out.triggered);
    CHECK(!out.lost);
    CHECK(out.time == doctest::Approx(cfg.trigger.bin_time).epsilon(1e-12));
  }

  SUBCASE("a fountain atom fires on arrival at the mode") {
    cfg.trigger.max_time = 3e-3;
    cfg.trigger.use_shot_noise = false;
    ParticleState st;
    st.r = {0.0, -2.0 * P.waist, 0.0};
    st.p = {0.0, P.atom_mass * 0.05, 0.0};  // 5 cm/s upward
    TrapNoiseProcess noise;
    HeatingBudget budget;
    auto rng = make_stream(3, 1);
    const auto out = run_trigger_phase(st, cfg, integ, noise, budget, P, rng);
    CHECK(out.triggered);
    // Transit of 2 w0 at 5 cm/s is 1.16 ms; the counts drop below threshold
    // somewhat before the geometric center.
    CHECK(out.time > 0.4e-3);
    CHECK(out.time < 2.0e-3);
    CHECK(std::fabs(st.r.y) < P.waist);  // trigger coincides with arrival
  }

  SUBCASE("an unbound atom is reported lost") {
    cfg.trigger.use_shot_noise = false;
    ParticleState st;  // leaving the mode volume fast, barely coupled
    st.r = {0.25 * P.lambda_probe, 1.9 * P.waist, 0.0};
    st.p = {0.0, P.atom_mass * 1.0, 0.0};
    TrapNoiseProcess noise;
    HeatingBudget budget;
    auto rng = make_stream(3, 2);
    const auto out = run_trigger_phase(st, cfg, integ, noise, budget, P, rng);
    CHECK(out.lost);
    CHECK(!out.triggered);
    CHECK(out.time == doctest::Approx(cfg.trigger.bin_time).epsilon(1e-12));
  }

  SUBCASE("no atom, no trigger: bins run out at max_time") {
    cfg.trigger.max_time = 0.2e-3;
    ParticleState st;  // parked far off axis, outside the mode
    st.r = {0.0, 5.0 * P.waist, 0.0};
    TrapNoiseProcess noise;
    HeatingBudget budget;
    auto rng = make_stream(3, 3);
    const auto out = run_trigger_phase(st, cfg, integ, noise, budget, P, rng);
    CHECK(!out.triggered);
    CHECK(!out.lost);
    CHECK(out.time == doctest::Approx(0.2e-3).epsilon(1e-12));
  }
}

TEST_CASE("trapping sequence") {
  ProtocolConfig cfg;
  cfg.probe_delta_c = mhz(10.0);
  cfg.max_run_time = 2.6e-3;
  const IntegratorConfig integ = fast_integ();

  ParticleState st;  // pinned cold atom at the antinode
  TrapNoiseProcess noise;
  auto rng = make_stream(4, 0);
  const double t0 = 400e-6;
  const auto res = run_trapping_sequence(st, t0, cfg, integ, noise, P, rng);

  SUBCASE("alternating timing pattern from integer step counts") {
    // 2.2 ms after the trigger: three full 600-us cycles plus a truncated
    // 400-us cooling tail.
    CHECK(res.intervals.size() == 7);
    CHECK(res.intervals.back().kind == IntervalKind::cooling);
    CHECK(res.intervals.back().end - res.intervals.back().start ==
          doctest::Approx(400e-6).epsilon(1e-9));
  }

  SUBCASE("pattern, boundaries and qualification") {
    REQUIRE(res.intervals.size() >= 5);
    CHECK(res.intervals.front().start == doctest::Approx(t0).epsilon(1e-15));
    double prev_end = t0;
    for (std::size_t i = 0; i < res.intervals.size(); ++i) {
      const auto& rec = res.intervals[i];
      CHECK(rec.start == doctest::Approx(prev_end).epsilon(1e-15));
      const bool is_cool = (i % 2 == 0);
      CHECK(rec.kind ==
            (is_cool ? IntervalKind::cooling : IntervalKind::probe));
      CHECK(rec.delta_c == (is_cool ? 0.0 : cfg.probe_delta_c));
      const double full = is_cool ? cfg.cooling_duration : cfg.probe_duration;
      const double want = std::min(full, cfg.max_run_time - rec.start);
      CHECK(rec.end - rec.start == doctest::Approx(want).epsilon(1e-9));
      CHECK(rec.atom_present);
      prev_end = rec.end;
    }
    CHECK(res.intervals.back().end ==
          doctest::Approx(cfg.max_run_time).epsilon(1e-12));

    // Cold pinned atom: every cooling interval sits far below the
    // qualification threshold, so every interior probe qualifies.
    for (std::size_t i = 0; i < res.intervals.size(); ++i) {
      const auto& rec = res.intervals[i];
      if (rec.kind == IntervalKind::cooling) {
        CHECK(rec.mean_transmission_rel < cfg.qualification_threshold);
        CHECK(!rec.qualified);
      } else {
        CHECK(rec.qualified == (i + 1 < res.intervals.size()));
      }
    }
    CHECK(!res.lost);
    CHECK(res.exit_time ==
          doctest::Approx(res.intervals.back().end).epsilon(1e-12));
  }

  SUBCASE("transmission levels match the pinned steady state") {
    const auto cool_ss = weak_drive_steady_state(P.g0, 0.0, 0.0, cfg.eta_probe, P);
    const auto probe_ss = weak_drive_steady_state(
        P.g0, cfg.probe_delta_c, cfg.probe_delta_c, cfg.eta_probe, P);
    for (const auto& rec : res.intervals) {
      const double expect_photon = rec.kind == IntervalKind::cooling
                                       ? cool_ss.photon_number
                                       : probe_ss.photon_number;
      const double expect_rel =
          expect_photon * P.kappa * P.kappa / (cfg.eta_probe * cfg.eta_probe);
      CHECK(rec.mean_transmission_rel ==
            doctest::Approx(expect_rel).epsilon(0.15));
      CHECK(rec.mean_coupling == doctest::Approx(P.g0).epsilon(0.01));
    }
  }

  SUBCASE("per-interval budgets sum to the run budget") {
    HeatingBudget sum;
    for (const auto& rec : res.intervals) sum += rec.budget;
    CHECK(sum.spont_recoil ==
          doctest::Approx(res.heating_budget.spont_recoil).epsilon(1e-12));
    CHECK(sum.dipole_fluct ==
          doctest::Approx(res.heating_budget.dipole_fluct).epsilon(1e-12));
    CHECK(sum.probe_work ==
          doctest::Approx(res.heating_budget.probe_work).epsilon(1e-12));
  }
}

TEST_CASE("offline qualification and exit rules") {
  ProtocolConfig cfg;  // qualification 0.02, exit 0.80

  SUBCASE("qualification needs both neighbors dark") {
    AtomRunResult res;
    res.intervals = {make_rec(IntervalKind::cooling, 0.001, 1e-3),
                     make_rec(IntervalKind::probe, 0.5, 2e-3),
                     make_rec(IntervalKind::cooling, 0.001, 3e-3),
                     make_rec(IntervalKind::probe, 0.5, 4e-3),
                     make_rec(IntervalKind::cooling, 0.5, 5e-3),
                     make_rec(IntervalKind::probe, 0.5, 6e-3)};
    qualify_intervals(res, cfg);
    CHECK(res.intervals[1].qualified);   // dark on both sides
    CHECK(!res.intervals[3].qualified);  // bright right neighbor
    CHECK(!res.intervals[5].qualified);  // no right neighbor at all
    CHECK(!res.intervals[0].qualified);  // cooling never qualifies
  }

  SUBCASE("exit time is the last dark cooling interval") {
    AtomRunResult res;
    res.trigger_time = 0.5e-3;
    res.intervals = {make_rec(IntervalKind::cooling, 0.01, 1e-3),
                     make_rec(IntervalKind::probe, 0.9, 2e-3),
                     make_rec(IntervalKind::cooling, 0.5, 3e-3),
                     make_rec(IntervalKind::probe, 0.01, 4e-3),
                     make_rec(IntervalKind::cooling, 0.95, 5e-3)};
    // Probe intervals never set the exit time, nor does the bright last
    // cooling interval.
    CHECK(recompute_exit_time(res, cfg) == doctest::Approx(3e-3));

    res.intervals[2].mean_transmission_rel = 0.95;
    CHECK(recompute_exit_time(res, cfg) == doctest::Approx(1e-3));

    res.intervals[0].mean_transmission_rel = 0.9;
    CHECK(recompute_exit_time(res, cfg) ==
          doctest::Approx(res.trigger_time));  // nothing dark: trigger only
  }
}

TEST_CASE("full atom runs") {
  ProtocolConfig cfg;
  cfg.trigger.max_time = 2e-3;
  cfg.max_run_time = 4e-3;
  const IntegratorConfig integ = fast_integ();
  TrapNoiseProcess noise;

  SUBCASE("ensemble members trigger and fill records") {
    int triggered = 0;
    for (std::uint64_t i = 0; i < 4; ++i) {
      const auto res = run_atom(cfg, integ, noise, P, 20260801, i);
      CHECK(res.atom_index == i);
      CHECK(res.stark_at_antinode == doctest::Approx(P.delta_a0).epsilon(1e-12));
      CHECK(res.trap_depth_hold == cfg.trap_depth_hold);
      CHECK(res.probe_delta_c == cfg.probe_delta_c);
      if (!res.triggered) {
        CHECK(res.intervals.empty());
        CHECK(res.exit_time == doctest::Approx(res.trigger_time));
        continue;
      }
      ++triggered;
      CHECK(res.trigger_time > 0.0);
      CHECK(res.exit_time >= res.trigger_time);
      REQUIRE(!res.intervals.empty());
      CHECK(res.intervals.front().kind == IntervalKind::cooling);
      for (std::size_t k = 1; k < res.intervals.size(); ++k)
        CHECK(res.intervals[k].kind != res.intervals[k - 1].kind);
    }
    CHECK(triggered >= 1);
  }

  SUBCASE("runs are reproducible per (seed, index) and distinct across seeds") {
    const auto a = run_atom(cfg, integ, noise, P, 99, 5);
    const auto b = run_atom(cfg, integ, noise, P, 99, 5);
    CHECK(a.triggered == b.triggered);
    CHECK(a.trigger_time == b.trigger_time);
    CHECK(a.exit_time == b.exit_time);
    CHECK(a.intervals.size() == b.intervals.size());
    CHECK(a.heating_budget.spont_recoil == b.heating_budget.spont_recoil);
    CHECK(a.heating_budget.probe_work == b.heating_budget.probe_work);

    const auto c = run_atom(cfg, integ, noise, P, 100, 5);
    const bool same = c.triggered == a.triggered &&
                      c.trigger_time == a.trigger_time &&
                      c.heating_budget.spont_recoil ==
                          a.heating_budget.spont_recoil;
    CHECK(!same);
  }

  SUBCASE("too-short trigger window yields an untriggered stub") {
    ProtocolConfig quick = cfg;
    quick.trigger.max_time = 50e-6;  // fountain atoms are still 2 w0 away
    const auto res = run_atom(quick, integ, noise, P, 20260801, 0);
    CHECK(!res.triggered);
    CHECK(res.intervals.empty());
    CHECK(res.trigger_time == doctest::Approx(50e-6).epsilon(1e-12));
    CHECK(res.exit_time == res.trigger_time);
  }

  SUBCASE("config validation rejects inconsistent thresholds") {
    ProtocolConfig bad = cfg;
    bad.qualification_threshold = 0.9;  // above exit threshold
    CHECK_THROWS_AS(run_atom(bad, integ, noise, P, 1, 0), ConfigError);
    bad = cfg;
    bad.trigger.threshold_rel = 1.5;
    CHECK_THROWS_AS(run_atom(bad, integ, noise, P, 1, 0), ConfigError);
    IntegratorConfig coarse = integ;
    coarse.dt = 4e-9;  // unstable for the coupled stepping
    CHECK_THROWS_AS(run_atom(cfg, coarse, noise, P, 1, 0), ConfigError);
  }
}
