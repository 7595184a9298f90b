#include <doctest.h>

#include <cstdio>
#include <string>

#include "cavitymc/config.hpp"

using namespace cavitymc;

TEST_CASE("defaults are self-consistent") {
  SimConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.integrator.dt == 2e-9);
  CHECK(cfg.physical.g0 == mhz(16.0));
  CHECK(cfg.protocol.trap_depth_hold ==
        doctest::Approx(kBoltzmann * 1.6e-3).epsilon(1e-15));
}

TEST_CASE("text round trip preserves every field bit for bit") {
  SimConfig hand;
  hand.physical.g0 = mhz(15.7);
  hand.physical.delta_a0 = mhz(-12.25);
  hand.protocol.probe_delta_c = mhz(13.5);
  hand.protocol.trap_depth_hold = kBoltzmann * 1.943e-3;
  hand.noise.sigma_eps = 0.0371234567890123;
  hand.integrator.dt = 1.5e-9;
  hand.integrator.record_stride = 37;
  hand.integrator.rng_seed = 1234567890123456789ull;
  hand.protocol.trigger.use_shot_noise = false;
  hand.calib_trajectories = 55;
  hand.oracle_n_empty = 3.25e-4;

  // Unit-suffixed keys rescale values on write (dt -> dt_ns), which is
  // 1-ulp- but not bit-stable against hand-assigned doubles; one pass
  // through the parser lands on its fixed point.
  const SimConfig cfg = parse_config_text(write_config_text(hand));
  CHECK(cfg.integrator.dt == doctest::Approx(1.5e-9).epsilon(1e-15));
  CHECK(cfg.physical.g0 == doctest::Approx(mhz(15.7)).epsilon(1e-15));

  const SimConfig back = parse_config_text(write_config_text(cfg));
  CHECK(back.physical.g0 == cfg.physical.g0);
  CHECK(back.physical.delta_a0 == cfg.physical.delta_a0);
  CHECK(back.protocol.probe_delta_c == cfg.protocol.probe_delta_c);
  CHECK(back.protocol.trap_depth_hold == cfg.protocol.trap_depth_hold);
  CHECK(back.noise.sigma_eps == cfg.noise.sigma_eps);
  CHECK(back.integrator.dt == cfg.integrator.dt);
  CHECK(back.integrator.record_stride == 37);
  CHECK(back.integrator.rng_seed == cfg.integrator.rng_seed);
  CHECK(back.protocol.trigger.use_shot_noise == false);
  CHECK(back.calib_trajectories == 55);
  CHECK(back.oracle_n_empty == cfg.oracle_n_empty);
  // And the text itself is a fixed point of the round trip.
  CHECK(write_config_text(back) == write_config_text(cfg));
}

TEST_CASE("units in key names") {
  const SimConfig cfg = parse_config_text(
      "g0_mhz = 20\n"
      "trap_depth_hold_mk = 2.0\n"
      "trap_depth_guide_mk = 0.5\n"
      "cooling_duration_us = 250\n"
      "max_run_time_ms = 10\n"
      "dt_ns = 1.5\n"  // the dt guard scales with g0, raised above
      "calib_temperature_uk = 120\n"
      "lambda_trap_nm = 785.3\n");
  CHECK(cfg.physical.g0 == doctest::Approx(mhz(20.0)).epsilon(1e-15));
  CHECK(cfg.protocol.trap_depth_hold ==
        doctest::Approx(kBoltzmann * 2e-3).epsilon(1e-15));
  CHECK(cfg.protocol.trap_depth_guide ==
        doctest::Approx(kBoltzmann * 0.5e-3).epsilon(1e-15));
  CHECK(cfg.protocol.cooling_duration == doctest::Approx(250e-6).epsilon(1e-15));
  CHECK(cfg.protocol.max_run_time == doctest::Approx(10e-3).epsilon(1e-15));
  CHECK(cfg.integrator.dt == doctest::Approx(1.5e-9).epsilon(1e-15));
  CHECK(cfg.calib_temperature == doctest::Approx(120e-6).epsilon(1e-15));
  CHECK(cfg.physical.lambda_trap == doctest::Approx(785.3e-9).epsilon(1e-15));
}

TEST_CASE("comments, blanks and whitespace are tolerated") {
  const SimConfig cfg = parse_config_text(
      "# leading comment\n"
      "\n"
      "   g0_mhz   =   18.5   # inline comment\n"
      "\t\n"
      "seed = 42\n"
      "shot_noise = off\n");
  CHECK(cfg.physical.g0 == doctest::Approx(mhz(18.5)).epsilon(1e-15));
  CHECK(cfg.integrator.rng_seed == 42);
  CHECK(!cfg.protocol.trigger.use_shot_noise);
}

TEST_CASE("malformed input is rejected with the offending line") {
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_config_text(text);
      FAIL_CHECK("expected ConfigError for: " << text);
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      CHECK(what.find(needle) != std::string::npos);
    }
  };
  expect_error("no_such_key = 1\n", "unknown key");
  expect_error("g0_mhz = 16\ng0_mhz = 17\n", "line 2");
  expect_error("g0_mhz = fast\n", "invalid value");
  expect_error("g0_mhz = 16 trailing\n", "trailing");
  expect_error("g0_mhz\n", "expected 'key = value'");
  expect_error("g0_mhz =\n", "empty value");
  expect_error("= 16\n", "empty key");
  expect_error("record_stride = 2.5\n", "integer");
  expect_error("seed = -3\n", "seed");
  expect_error("shot_noise = maybe\n", "on");
  expect_error("g0_mhz = inf\n", "non-finite");
  // Values that parse but violate physics are caught by validation.
  CHECK_THROWS_AS(parse_config_text("g0_mhz = -16\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("dt_ns = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("qualification_threshold = 0.9\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text("excitation_target = 0.9\n"), ConfigError);
}

TEST_CASE("file round trip and missing files") {
  const std::string path = "/tmp/cavitymc_test_config.cfg";
  SimConfig cfg;
  cfg.noise.sigma_eps = 0.042;
  save_config(cfg, path);
  const SimConfig back = load_config(path);
  CHECK(back.noise.sigma_eps == 0.042);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config("/tmp/definitely_missing_cavitymc.cfg"),
                  ConfigError);
}
