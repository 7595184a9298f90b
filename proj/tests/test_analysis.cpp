#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cavitymc/analysis.hpp"

using namespace cavitymc;

namespace {

const PhysicalParams P{};
const double kDepth = kBoltzmann * 1.6e-3;

AtomRunResult synth_run(std::uint64_t atom, double delta_c,
                        double depth = kDepth) {
  AtomRunResult r;
  r.atom_index = atom;
  r.triggered = true;
  r.trigger_time = 0.5e-3;
  r.trap_depth_hold = depth;
  r.probe_delta_c = delta_c;
  return r;
}

IntervalRecord probe_rec(double start, double t_rel, bool qualified,
                         double exposure = 100e-6) {
  IntervalRecord rec;
  rec.kind = IntervalKind::probe;
  rec.start = start;
  rec.end = start + exposure;
  rec.mean_transmission_rel = t_rel;
  rec.qualified = qualified;
  rec.exposure = exposure;
  return rec;
}

IntervalRecord cool_rec(double start, double exposure = 500e-6) {
  IntervalRecord rec;
  rec.kind = IntervalKind::cooling;
  rec.start = start;
  rec.end = start + exposure;
  rec.exposure = exposure;
  return rec;
}

}  // namespace

TEST_CASE("transmission spectrum") {
  SUBCASE("means, errors and counts by hand") {
    auto a = synth_run(0, 0.0);
    a.intervals = {probe_rec(1e-3, 0.1, true), probe_rec(2e-3, 0.3, false)};
    auto b = synth_run(1, 0.0);
    b.intervals = {probe_rec(1e-3, 0.2, true)};
    auto stub = synth_run(2, 0.0);
    stub.triggered = false;  // untriggered atoms carry no intervals

    const auto q = transmission_spectrum({a, b, stub}, true);
    REQUIRE(q.size() == 1);
    CHECK(q[0].delta_c == 0.0);
    CHECK(q[0].trap_depth == kDepth);
    CHECK(q[0].mean_value == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(q[0].std_error == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(q[0].n_intervals == 2);
    CHECK(q[0].n_atoms == 2);
    CHECK(q[0].power_nw == doctest::Approx(280.0).epsilon(1e-12));

    const auto all = transmission_spectrum({a, b, stub}, false);
    REQUIRE(all.size() == 1);
    CHECK(all[0].mean_value == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(all[0].n_intervals == 3);

    // A single interval has no standard error.
    const auto solo = transmission_spectrum({b}, true);
    CHECK(solo[0].std_error == 0.0);
  }

  SUBCASE("points come out sorted by depth then detuning") {
    std::vector<AtomRunResult> runs;
    for (double depth : {kDepth, 0.5 * kDepth})
      for (double dc : {mhz(5.0), mhz(-5.0)}) {
        auto r = synth_run(runs.size(), dc, depth);
        r.intervals = {probe_rec(1e-3, 0.1, true)};
        runs.push_back(r);
      }
    const auto pts = transmission_spectrum(runs, true);
    REQUIRE(pts.size() == 4);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const bool ordered =
          pts[i - 1].trap_depth < pts[i].trap_depth ||
          (pts[i - 1].trap_depth == pts[i].trap_depth &&
           pts[i - 1].delta_c < pts[i].delta_c);
      CHECK(ordered);
    }
  }

  SUBCASE("aggregation is permutation-invariant bit for bit") {
    // Values chosen so naive input-order summation rounds differently:
    // sorted by atom the sum cancels to zero exactly.
    const double vals[4] = {1e16, 1.0, 1.0, -1e16};
    std::vector<AtomRunResult> runs;
    for (std::uint64_t i = 0; i < 4; ++i) {
      auto r = synth_run(i, 0.0);
      r.intervals = {probe_rec(1e-3, vals[i], true)};
      runs.push_back(r);
    }
    const double reference = transmission_spectrum(runs, true)[0].mean_value;
    // (1e16 + 1) rounds back to 1e16 twice, then cancels exactly; the
    // 1,1,1e16,-1e16 order would instead give 0.5.
    CHECK(reference == 0.0);

    std::vector<AtomRunResult> shuffled = {runs[1], runs[2], runs[0], runs[3]};
    CHECK(transmission_spectrum(shuffled, true)[0].mean_value == reference);
    std::vector<AtomRunResult> reversed = {runs[3], runs[2], runs[1], runs[0]};
    CHECK(transmission_spectrum(reversed, true)[0].mean_value == reference);
  }

  SUBCASE("no runs is an error") {
    CHECK_THROWS_AS(transmission_spectrum({}, true), ConfigError);
  }
}

TEST_CASE("loss rate spectrum by hand") {
  auto a0 = synth_run(0, mhz(13.5));
  a0.intervals = {cool_rec(1e-3, 0.5e-3), probe_rec(2e-3, 0.1, true, 0.1e-3),
                  cool_rec(3e-3, 0.5e-3), probe_rec(4e-3, 0.1, true, 0.1e-3)};
  a0.lost = true;
  a0.loss_during_probe = true;

  auto a1 = synth_run(1, mhz(13.5));
  a1.intervals = {cool_rec(1e-3, 0.5e-3), probe_rec(2e-3, 0.1, true, 0.1e-3),
                  cool_rec(3e-3, 0.5e-3)};
  a1.lost = true;  // lost during cooling

  auto a2 = synth_run(2, mhz(13.5));
  a2.intervals = {cool_rec(1e-3, 0.25e-3), probe_rec(2e-3, 0.1, true, 0.05e-3)};

  auto stub = synth_run(3, mhz(13.5));
  stub.triggered = false;

  const auto pts = loss_rate_spectrum({a0, a1, a2, stub});
  REQUIRE(pts.size() == 1);
  const auto& pt = pts[0];
  CHECK(pt.n_atoms == 3);
  CHECK(pt.n_loss_probe == 1);
  CHECK(pt.n_loss_cooling == 1);
  CHECK(pt.probe_exposure == doctest::Approx(0.35e-3).epsilon(1e-12));
  CHECK(pt.cooling_exposure == doctest::Approx(2.25e-3).epsilon(1e-12));
  CHECK(pt.probe_rate == doctest::Approx(1.0 / 0.35e-3).epsilon(1e-12));
  CHECK(pt.baseline_rate == doctest::Approx(1.0 / 2.25e-3).epsilon(1e-12));
  CHECK(pt.excess_rate ==
        doctest::Approx(1.0 / 0.35e-3 - 1.0 / 2.25e-3).epsilon(1e-12));
  const double var = 1.0 / (0.35e-3 * 0.35e-3) + 1.0 / (2.25e-3 * 2.25e-3);
  CHECK(pt.std_error == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
}

TEST_CASE("coupling histogram") {
  std::vector<AtomRunResult> runs;
  const double gs[4] = {mhz(4.2), mhz(4.7), mhz(12.3), mhz(15.9)};
  for (std::uint64_t i = 0; i < 4; ++i) {
    auto r = synth_run(i, 0.0);
    auto rec = probe_rec(1e-3, 0.1, i != 3);  // the strongest one unqualified
    rec.mean_coupling = gs[i];
    r.intervals = {rec};
    runs.push_back(r);
  }

  const auto hist = coupling_distribution(runs, false, mhz(0.5));
  CHECK(hist.n_intervals == 4);
  CHECK(hist.mean == doctest::Approx(mhz(9.275)).epsilon(1e-12));
  double area = 0.0;
  for (double d : hist.density) area += d * hist.bin_width;
  CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
  // 4.2 lands in bin [4.0, 4.5), so everything below 4.5 MHz is one value.
  CHECK(hist.fraction_below(mhz(4.5)) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(hist.fraction_below(mhz(4.0)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(hist.fraction_below(mhz(100.0)) == doctest::Approx(1.0).epsilon(1e-12));

  const auto q = coupling_distribution(runs, true, mhz(0.5));
  CHECK(q.n_intervals == 3);
  CHECK(q.mean == doctest::Approx((gs[0] + gs[1] + gs[2]) / 3.0).epsilon(1e-12));

  CHECK(coupling_distribution({}, false, mhz(0.5)).n_intervals == 0);
  CHECK_THROWS_AS(coupling_distribution(runs, false, 0.0), ConfigError);
}

TEST_CASE("axial localization") {
  const double bw = 0.5 * P.lambda_trap / double(kAxialBins);

  auto with_hist = [&](std::vector<std::pair<int, std::uint32_t>> fill,
                       bool qualified) {
    auto r = synth_run(0, 0.0);
    auto rec = probe_rec(1e-3, 0.1, qualified);
    for (auto [bin, n] : fill) rec.axial_hist[bin] = n;
    r.intervals = {rec};
    return r;
  };

  SUBCASE("single occupied bin gives one bin of width") {
    const auto res =
        axial_localization({with_hist({{24, 1500}}, true)}, true, P);
    CHECK(res.n_samples == 1500);
    CHECK(res.fwhm == doctest::Approx(bw).epsilon(1e-12));
    double area = 0.0;
    for (double d : res.density) area += d * bw;
    CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("two equal bins give two bins of width") {
    const auto res = axial_localization(
        {with_hist({{23, 600}, {24, 600}}, true)}, true, P);
    CHECK(res.fwhm == doctest::Approx(2.0 * bw).epsilon(1e-12));
  }

  SUBCASE("interpolated crossing between unequal bins") {
    // Peak 1000, neighbors 500 = exactly half: crossings sit at the
    // neighbor centers themselves.
    const auto res = axial_localization(
        {with_hist({{23, 500}, {24, 1000}, {25, 500}}, true)}, true, P);
    CHECK(res.fwhm == doctest::Approx(2.0 * bw).epsilon(1e-12));
  }

  SUBCASE("insufficient statistics and qualification filtering") {
    CHECK_THROWS_AS(axial_localization({with_hist({{24, 999}}, true)}, true, P),
                    ToleranceError);
    // Unqualified intervals are invisible to the qualified-only view.
    CHECK_THROWS_AS(
        axial_localization({with_hist({{24, 5000}}, false)}, true, P),
        ToleranceError);
    CHECK_NOTHROW(
        axial_localization({with_hist({{24, 5000}}, false)}, false, P));
  }
}

TEST_CASE("heating attribution") {
  SUBCASE("probe-interval channels only, with hand shares") {
    auto r = synth_run(0, mhz(11.0));
    auto p1 = probe_rec(1e-3, 0.1, true);
    p1.budget.spont_recoil = 3e-28;
    p1.budget.dipole_fluct = 0.5e-28;
    auto p2 = probe_rec(2e-3, 0.1, true);
    p2.budget.spont_recoil = 0.0;
    p2.budget.dipole_fluct = 0.5e-28;
    auto c1 = cool_rec(0.5e-3);
    c1.budget.spont_recoil = 1e-20;  // must not contaminate the attribution
    c1.budget.trap_noise = 1e-20;
    r.intervals = {c1, p1, p2};

    const auto pts = heating_attribution({r});
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].defined);
    CHECK(pts[0].spont_share == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(pts[0].dipole_share == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(pts[0].totals.spont_recoil == doctest::Approx(3e-28).epsilon(1e-15));
    CHECK(pts[0].totals.trap_noise == 0.0);
  }

  SUBCASE("zero probe heat leaves the shares undefined") {
    auto r = synth_run(0, 0.0);
    r.intervals = {probe_rec(1e-3, 0.1, true)};
    const auto pts = heating_attribution({r});
    REQUIRE(pts.size() == 1);
    CHECK(!pts[0].defined);
    CHECK(pts[0].spont_share == 0.0);
  }

  SUBCASE("summation order is pinned by (atom, start)") {
    const double vals[4] = {1e16, 1.0, 1.0, -1e16};
    std::vector<AtomRunResult> runs;
    for (std::uint64_t i = 0; i < 4; ++i) {
      auto r = synth_run(i, 0.0);
      auto rec = probe_rec(1e-3, 0.1, true);
      rec.budget.spont_recoil = vals[i];
      rec.budget.dipole_fluct = 1.0;
      r.intervals = {rec};
      runs.push_back(r);
    }
    const auto ref = heating_attribution(runs)[0];
    CHECK(ref.totals.spont_recoil == 0.0);  // sorted accumulation cancels
    std::vector<AtomRunResult> shuffled = {runs[2], runs[0], runs[3], runs[1]};
    CHECK(heating_attribution(shuffled)[0].totals.spont_recoil ==
          ref.totals.spont_recoil);
    CHECK(heating_attribution(shuffled)[0].spont_share == ref.spont_share);
  }
}

TEST_CASE("double-Lorentzian fit") {
  auto lorentz = [](double x, double a, double c, double w) {
    const double u = 2.0 * (x - c) / w;
    return a / (1.0 + u * u);
  };

  SUBCASE("exact synthetic doublet is recovered") {
    const double b = 0.012, a1 = 0.05, c1 = -16.0, w1 = 4.0;
    const double a2 = 0.062, c2 = 16.0, w2 = 5.5;
    std::vector<double> xs, ys;
    for (int i = 0; i <= 40; ++i) {
      const double x = -25.0 + 50.0 * i / 40.0;
      xs.push_back(mhz(x));
      ys.push_back(b + lorentz(x, a1, c1, w1) + lorentz(x, a2, c2, w2));
    }
    const auto fit = fit_normal_modes(xs, ys);
    CHECK(fit.center_lo / mhz(1.0) == doctest::Approx(c1).epsilon(1e-7));
    CHECK(fit.center_hi / mhz(1.0) == doctest::Approx(c2).epsilon(1e-7));
    CHECK(fit.fwhm_lo / mhz(1.0) == doctest::Approx(w1).epsilon(1e-6));
    CHECK(fit.fwhm_hi / mhz(1.0) == doctest::Approx(w2).epsilon(1e-6));
    CHECK(fit.height_lo == doctest::Approx(a1).epsilon(1e-6));
    CHECK(fit.height_hi == doctest::Approx(a2).epsilon(1e-6));
    CHECK(fit.background == doctest::Approx(b).epsilon(1e-5));
    CHECK(fit.residual_rms < 1e-10);
  }

  SUBCASE("asymmetric sampling still finds both peaks") {
    // Detuning grids in practice are denser near the modes.
    const std::vector<double> grid = {-25, -20, -16, -13.5, -11, -8, -4, 0,
                                      4,   8,   11,  13.5,  16,  20, 25};
    std::vector<double> xs, ys;
    for (double x : grid) {
      xs.push_back(mhz(x));
      ys.push_back(0.01 + lorentz(x, 0.04, -16.2, 5.0) +
                   lorentz(x, 0.04, 16.2, 5.0));
    }
    const auto fit = fit_normal_modes(xs, ys);
    CHECK(fit.center_lo / mhz(1.0) == doctest::Approx(-16.2).epsilon(5e-3));
    CHECK(fit.center_hi / mhz(1.0) == doctest::Approx(16.2).epsilon(5e-3));
  }

  SUBCASE("degenerate inputs are rejected") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 7; ++i) {
      xs.push_back(mhz(double(i)));
      ys.push_back(0.1);
    }
    CHECK_THROWS_AS(fit_normal_modes(xs, ys), FitError);  // too few points

    xs.clear();
    ys.clear();
    for (int i = 0; i <= 30; ++i) {
      const double x = -25.0 + 50.0 * i / 30.0;
      xs.push_back(mhz(x));
      ys.push_back(lorentz(x, 0.9, 0.0, 2.6));  // a single empty-cavity peak
    }
    CHECK_THROWS_AS(fit_normal_modes(xs, ys), FitError);

    CHECK_THROWS_AS(fit_normal_modes({mhz(1.0)}, {0.1, 0.2}), ConfigError);
  }
}
