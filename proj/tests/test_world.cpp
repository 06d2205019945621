#include <doctest.h>

#include <cmath>

#include "coopnav/rng.hpp"
#include "coopnav/world.hpp"

using namespace coopnav;

namespace {

const char* kMinimalConfig = R"(
version = 1
vehicle = 10 10 0 150 150
landmark = 0 50 50
landmark = 1 80 20
)";

}  // namespace

TEST_CASE("minimal config gets reference defaults") {
  const Scenario s = load_scenario(kMinimalConfig);
  CHECK(s.vehicles.size() == 1);
  CHECK(s.landmarks.size() == 2);
  CHECK(s.w_connectivity == doctest::Approx(10000.0));
  CHECK(s.rs_m == doctest::Approx(50.0));
  CHECK(s.eta == doctest::Approx(2.0));
  CHECK(s.kappa == doctest::Approx(5.0));
  CHECK(s.rho_m == doctest::Approx(0.5));
  CHECK(s.v_mps == doctest::Approx(5.0));
  CHECK(s.ts_s == doctest::Approx(0.1));
  CHECK(s.sigma_c_m == doctest::Approx(3.0));
  CHECK(s.gamma_rad2 == doctest::Approx(0.01));
  CHECK(s.n_e_steps == 20);
  CHECK(s.omega_min_rads == doctest::Approx(-kPi / 2));
  CHECK(s.omega_max_rads == doctest::Approx(kPi / 2));
}

TEST_CASE("validation names the violated field") {
  std::string text = kMinimalConfig;
  text += "rs_m = 10\nrho_m = 10\n";
  CHECK_THROWS_WITH_AS(load_scenario(text), doctest::Contains("rs_m must exceed rho_m"),
                       ScenarioError);
}

TEST_CASE("larger config parses all entries") {
  std::string text = "version = 1\n";
  for (int i = 0; i < 3; ++i) {
    text += "vehicle = " + std::to_string(10 + i * 20) + " 10 0 150 180\n";
  }
  for (int j = 0; j < 20; ++j) {
    text += "landmark = " + std::to_string(j) + " " + std::to_string(5 + 9 * j) + " " +
            std::to_string(3 + 7 * (j % 5)) + "\n";
  }
  const Scenario s = load_scenario(text);
  CHECK(s.vehicles.size() == 3);
  CHECK(s.landmarks.size() == 20);
}

TEST_CASE("parse failures are reported") {
  CHECK_THROWS_AS(load_scenario("version = 1\nvehicle = 1 2 3 4 5\nbogus_key = 9\n"),
                  ScenarioError);
  CHECK_THROWS_AS(load_scenario("vehicle = 1 2 3 4 5\n"), ScenarioError);  // no version
  CHECK_THROWS_AS(load_scenario("version = 1\nvehicle = 1 2 3\n"), ScenarioError);
  CHECK_THROWS_WITH_AS(load_scenario("version = 1\n"),
                       doctest::Contains("at least one vehicle"), ScenarioError);
  CHECK_THROWS_AS(load_scenario("version = 1\nvehicle = 1 2 3 4 nope\n"), ScenarioError);
}

TEST_CASE("duplicate landmark ids rejected") {
  std::string text = kMinimalConfig;
  text += "landmark = 0 30 30\n";
  CHECK_THROWS_WITH_AS(load_scenario(text), doctest::Contains("duplicates"), ScenarioError);
}

TEST_CASE("config round-trips exactly") {
  Scenario s = load_scenario(kMinimalConfig);
  s.tau_h_s = 7.3;
  s.gamma_rad2 = 0.0123456789012345;
  s.seed = 982451653;
  s.w_predictive = false;
  s.vehicles.push_back(
      {VehicleState::make(1.25, 2.5, 0.7853981633974483), {199.0, 3.0}});
  validate_scenario(s);
  const Scenario back = load_scenario(serialize_scenario(s));
  CHECK(back == s);

  // A second round trip is a fixed point.
  CHECK(serialize_scenario(back) == serialize_scenario(s));
}

TEST_CASE("gaussian degenerate variance returns mean exactly") {
  RngStream rng(42);
  CHECK(rng.gaussian(1.5, 0.0) == 1.5);
  CHECK_THROWS_AS(rng.gaussian(0.0, -1.0), std::domain_error);
}

TEST_CASE("gaussian sample moments") {
  RngStream rng(7);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double draw = rng.gaussian(0.0, 0.01);
    sum += draw;
    sum2 += draw * draw;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  // 3 sigma / sqrt(n) band for the mean; chi-square concentration for the
  // variance.
  CHECK(std::abs(mean) < 0.002);
  CHECK(var == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("equal seeds draw identical sequences") {
  RngStream a(123456789), b(123456789);
  for (int i = 0; i < 10000; ++i) {
    REQUIRE(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("child streams are label-keyed and independent of siblings") {
  RngStream master(99);
  RngStream meas1 = master.child("measurement");
  RngStream place = master.child("placement");
  RngStream meas2 = RngStream(99).child("measurement");
  CHECK(meas1.next_u64() == meas2.next_u64());
  CHECK(meas1.seed() != place.seed());
}

TEST_CASE("uniform stays in range") {
  RngStream rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(2.0, 3.0);
    CHECK(u >= 2.0);
    CHECK(u < 3.0);
  }
}
