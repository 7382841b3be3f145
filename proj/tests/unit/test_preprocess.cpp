#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "odbguard/error.hpp"
#include "odbguard/preprocess.hpp"
#include "odbguard/vehsim.hpp"

using namespace odbguard;

namespace {

constexpr double kKmhToMs = 1000.0 / 3600.0;

std::vector<AccelSample> flat_accel(double t_end, double rate_hz, double ax) {
  std::vector<AccelSample> out;
  for (int n = 0;; ++n) {
    const double t = n / rate_hz;
    if (t > t_end) break;
    out.push_back({t, ax, 0.0, 9.81});
  }
  return out;
}

}  // namespace

TEST_CASE("speed variation: unit arithmetic") {
  auto v = derive_speed_variation({{0.0, 36}, {1.0, 40}});
  REQUIRE(v.size() == 1);
  CHECK(v[0].y == doctest::Approx(4.0 * kKmhToMs).epsilon(1e-12));
  CHECK(v[0].y == doctest::Approx(1.1111).epsilon(1e-4));
  CHECK(v[0].t_end == 1.0);

  v = derive_speed_variation({{0.0, 50}, {1.02, 50}});
  REQUIRE(v.size() == 1);
  CHECK(v[0].y == 0.0);

  v = derive_speed_variation({{0.0, 36}, {0.9, 36}, {1.9, 27}});
  REQUIRE(v.size() == 2);
  CHECK(v[1].y == doctest::Approx(-2.5).epsilon(1e-12));
}

TEST_CASE("speed variation: degenerate inputs") {
  CHECK(derive_speed_variation({}).empty());
  CHECK(derive_speed_variation({{0.0, 10}}).empty());
  CHECK_THROWS_AS(derive_speed_variation({{1.0, 10}, {1.0, 12}}), UsageError);
}

TEST_CASE("speed variation: doubling speeds doubles every y exactly") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SpeedSample> s, s2;
    double t = 0.0;
    for (int i = 0; i < 30; ++i) {
      const double v = fixtures::uniform(rng, 0.0, 120.0);
      s.push_back({t, v});
      s2.push_back({t, 2.0 * v});
      t += fixtures::uniform(rng, 0.8, 1.2);
    }
    const auto a = derive_speed_variation(s);
    const auto b = derive_speed_variation(s2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i].y == 2.0 * a[i].y);
  }
}

TEST_CASE("accel windows: means, missing windows, sample counts") {
  const auto w = average_accel_windows({{0.2, 0.1, 0, 9.8}, {0.7, 0.3, 0, 9.8}, {2.5, 1.0, 1.0, 1.0}, {4.1, 0, 0, 0}});
  REQUIRE(w.size() == 5);
  CHECK(w[0].x[0] == doctest::Approx(0.2));
  CHECK(w[0].n_samples == 2);
  CHECK_FALSE(w[0].missing);
  CHECK(w[1].missing);
  CHECK(w[3].missing);  // empty [3, 4)
  CHECK_FALSE(w[4].missing);

  PreprocessConfig strict;
  strict.min_samples_per_window = 2;
  const auto ws = average_accel_windows({{0.2, 0.1, 0, 9.8}, {0.7, 0.3, 0, 9.8}, {1.5, 1, 1, 1}}, strict);
  CHECK_FALSE(ws[0].missing);
  CHECK(ws[1].missing);
}

TEST_CASE("accel windows: 16.7 Hz fills each full window with 16 or 17 samples") {
  const auto windows = average_accel_windows(flat_accel(120.0, 16.7, 0.0));
  for (std::size_t k = 0; k + 1 < windows.size(); ++k) {
    CAPTURE(k);
    CHECK((windows[k].n_samples == 16 || windows[k].n_samples == 17));
  }
}

TEST_CASE("alignment: integer 1 Hz speed pairs y_i with window i-1") {
  std::vector<SpeedSample> speed;
  std::vector<AccelSample> accel;
  for (int i = 0; i <= 10; ++i) speed.push_back({double(i), 10.0 + i * i});
  for (int k = 0; k < 10; ++k) {
    for (int j = 0; j < 4; ++j) accel.push_back({k + j * 0.25, double(k), -double(k), 9.81});
  }
  const auto result = align_records(derive_speed_variation(speed), average_accel_windows(accel));
  REQUIRE(result.records.size() == 10);
  CHECK(result.dropped == 0);
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const auto& r = result.records[i];
    CHECK(r.t == static_cast<std::int64_t>(i + 1));
    CHECK(r.x[0] == double(i));
    CHECK(r.x[1] == -double(i));
  }
}

TEST_CASE("alignment: off-grid interval takes an overlap-weighted mean") {
  const std::vector<SpeedVariation> v = {{0.25, 1.25, 1.0, 1}};
  std::vector<AccelWindow> w(2);
  w[0] = {0, {1.0, 0.0, 0.0}, 5, false};
  w[1] = {1, {3.0, 0.0, 0.0}, 5, false};
  const auto result = align_records(v, w);
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].x[0] == doctest::Approx((0.75 * 1.0 + 0.25 * 3.0) / 1.0));
  CHECK(result.records[0].t == 1);
}

TEST_CASE("alignment: a missing window drops its record and is counted") {
  std::vector<SpeedSample> speed;
  std::vector<AccelSample> accel;
  for (int i = 0; i <= 5; ++i) speed.push_back({double(i), 20.0});
  for (int k = 0; k < 5; ++k) {
    if (k == 2) continue;
    accel.push_back({k + 0.5, 0.0, 0.0, 9.81});
  }
  const auto result = align_records(derive_speed_variation(speed), average_accel_windows(accel));
  CHECK(result.records.size() == 4);
  CHECK(result.dropped == 1);
  for (const auto& r : result.records) CHECK(r.t != 3);
}

TEST_CASE("alignment: disjoint spans give no records") {
  RawTrip trip;
  trip.speed_series = {{100.0, 10}, {101.0, 12}, {102.0, 13}};
  trip.accel_series = {{0.5, 0, 0, 9.8}, {1.5, 0, 0, 9.8}};
  const auto result = preprocess_trip(trip);
  CHECK(result.records.empty());
  CHECK(result.dropped == 2);
}

TEST_CASE("alignment: a record is labelled when either bounding speed sample is") {
  RawTrip trip;
  for (int i = 0; i <= 4; ++i) trip.speed_series.push_back({double(i), 30.0});
  for (int k = 0; k < 4; ++k) trip.accel_series.push_back({k + 0.5, 0, 0, 9.81});
  trip.truth_labels = std::vector<bool>{false, false, true, false, false};
  const auto r = preprocess_trip(trip).records;
  REQUIRE(r.size() == 4);
  CHECK(r[0].label == false);
  CHECK(r[1].label == true);
  CHECK(r[2].label == true);
  CHECK(r[3].label == false);

  trip.truth_labels.reset();
  for (const auto& rec : preprocess_trip(trip).records) CHECK_FALSE(rec.label.has_value());
}

TEST_CASE("length law on generated trips") {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto trip = fixtures::random_trip(rng, true);
    const auto n_var = derive_speed_variation(trip.speed_series).size();
    const auto result = preprocess_trip(trip);
    CHECK(result.records.size() <= n_var);
    CHECK(result.records.size() + result.dropped == n_var);
  }
}

TEST_CASE("zero-noise simulated trip: y equals forward acceleration") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto scenario = make_mixed_scenario(seed, MixedDriveOptions{.duration_s = 300.0,
                                                                .hard_brakes = 2.0,
                                                                .hard_brake_min_ms2 = 4.0,
                                                                .hard_brake_max_ms2 = 6.0,
                                                                .noise = {0.0, 0.0, 0.0, 9.81, 0.0}});
    scenario.quantize_speed = false;
    const auto records = preprocess_trip(generate_trip(scenario)).records;
    REQUIRE(records.size() > 250);
    double total = 0.0;
    double worst = 0.0;
    for (const auto& r : records) {
      total += std::abs(r.y - r.x[0]);
      worst = std::max(worst, std::abs(r.y - r.x[0]));
    }
    CHECK(total / static_cast<double>(records.size()) < 1e-6);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("zero-noise with integer OBD speed stays within one quantization step") {
  auto scenario = make_mixed_scenario(4, MixedDriveOptions{.duration_s = 300.0,
                                                           .hard_brakes = 2.0,
                                                           .hard_brake_min_ms2 = 4.0,
                                                           .hard_brake_max_ms2 = 6.0,
                                                           .noise = {0.0, 0.0, 0.0, 9.81, 0.0}});
  const auto records = preprocess_trip(generate_trip(scenario)).records;
  for (const auto& r : records) CHECK(std::abs(r.y - r.x[0]) <= kKmhToMs + 1e-9);
}

TEST_CASE("config validation") {
  PreprocessConfig bad;
  bad.window_s = 0.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = {};
  bad.min_samples_per_window = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}
