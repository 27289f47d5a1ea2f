#include "rfsbound/scenarios.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace rfsbound;

TEST_CASE("linear_default") {
  const ScenarioSpec s = linear_default();
  CHECK(s.kind == ScenarioKind::LinearCV);
  CHECK(s.params.pd == 0.8);
  CHECK(s.params.b == 1.0);
  CHECK(s.params.r == 1.0);
  CHECK(s.t_step == 5.0);
  CHECK(s.q == 1e-8);
  CHECK(s.scans == 10);
  CHECK(s.sensor_cov.isApprox(Eigen::MatrixXd(Eigen::Vector2d(625, 625).asDiagonal())));
  CHECK(s.params.e0 == StateVec(100, 5, 100, 5));
  CHECK(s.params.e1 == StateVec(100, 5, 100, 5));
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("bearings_default") {
  const ScenarioSpec s = bearings_default();
  CHECK(s.kind == ScenarioKind::BearingsOnly);
  CHECK(s.sensor_cov(0, 0) == doctest::Approx(std::pow(std::numbers::pi / 180.0, 2)));
  CHECK(*s.omega == doctest::Approx(1.0125 * std::numbers::pi / 180.0));
  CHECK(s.c_r == 10000.0);
  CHECK(s.c_v == 100.0);
  CHECK(s.scans == 20);
  CHECK(s.params.pd == 0.9);
  CHECK(s.noiseless());
  CHECK(nominal_state(s, 1).isApprox(StateVec(5000, -50, -30000, 100)));
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("validate rejects inconsistent specs") {
  ScenarioSpec s = linear_default();
  s.omega = 0.1;
  CHECK_THROWS_AS(s.validate(), InvalidParams);
  s = bearings_default();
  s.initial_ownship.reset();
  CHECK_THROWS_AS(s.validate(), InvalidParams);
  s = linear_default();
  s.scans = 0;
  CHECK_THROWS_AS(s.validate(), InvalidParams);
}

TEST_CASE("scan_models: linear bundles are constant") {
  const ScenarioSpec s = linear_default();
  const ScanModel first = scan_models(s, 1);
  for (int k = 2; k <= s.scans; ++k) {
    const ScanModel m = scan_models(s, k);
    CHECK(m.lg.f_mat == first.lg.f_mat);
    CHECK(m.lg.q_mat == first.lg.q_mat);
    CHECK(m.lg.h_mat == first.lg.h_mat);
    CHECK(m.lg.r_mat == first.lg.r_mat);
    CHECK(m.offset.isZero());
  }
  CHECK_THROWS(scan_models(s, 0));
  CHECK_THROWS(scan_models(s, 11));
}

TEST_CASE("scan_models: bearings") {
  const ScenarioSpec s = bearings_default();
  const ScanModel m1 = scan_models(s, 1);
  CHECK(m1.lg.noiseless);
  CHECK(m1.kind == MeasurementKind::Bearing);
  CHECK((m1.lg.h_mat - bearing_jacobian(StateVec(5000, -50, -30000, 100))).cwiseAbs().maxCoeff() < 1e-15);

  // The relative dynamics with the scan offsets reproduce the nominal track.
  StateVec x = nominal_state(s, 0);
  double min_range = INFINITY;
  for (int k = 1; k <= 20; ++k) {
    const ScanModel m = scan_models(s, k);
    x = m.lg.f_mat * x - m.offset;
    const StateVec nominal = nominal_state(s, k);
    CHECK((x - nominal).cwiseAbs().maxCoeff() < 1e-6);
    min_range = std::min(min_range, std::hypot(nominal[0], nominal[2]));
    if (k >= 2) {
      CHECK((m.offset - s.bearings_model().relative_offset(k - 1)).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  CHECK(min_range > 1000.0);
}

TEST_CASE("nominal bearings trajectory is reproducible") {
  const ScenarioSpec s = bearings_default();
  for (int k = 0; k <= 20; ++k) {
    CHECK(nominal_state(s, k) == nominal_state(bearings_default(), k));
  }
}

TEST_CASE("prior") {
  const ScenarioSpec s = linear_default();
  CHECK(s.prior().mean.isZero());
  CHECK(s.prior().cov == StateMat(StateVec(1e4, 25, 1e4, 25).asDiagonal()));
  const ScenarioSpec b = bearings_default();
  // Scan-0 mean propagates to the scan-1 relative state.
  const ScanModel m1 = scan_models(b, 1);
  CHECK((m1.lg.f_mat * b.prior().mean - m1.offset - StateVec(5000, -50, -30000, 100)).cwiseAbs().maxCoeff() < 1e-6);
}
