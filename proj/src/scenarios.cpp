#include "rfsbound/scenarios.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rfsbound {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

StateVec ownship_at(const BearingsScenarioModel& m, int k) {
  if (k == 0) {
    return m.turn_matrix().inverse() * m.ownship0;
  }
  return m.ownship_state(k);
}

StateVec target_at(const BearingsScenarioModel& m, int k) {
  if (k == 0) {
    return cv_transition(m.t_step).inverse() * m.target0;
  }
  return m.target_state(k);
}

}  // namespace

const char* to_string(ScenarioKind kind) {
  return kind == ScenarioKind::LinearCV ? "linear" : "bearings";
}

void ScenarioSpec::validate() const {
  if (scans < 1) {
    throw InvalidParams("scans must be >= 1");
  }
  if (!(t_step > 0.0)) {
    throw InvalidParams("t_step must be > 0");
  }
  if (!(q >= 0.0)) {
    throw InvalidParams("q must be >= 0");
  }
  if (!(c_r > 0.0) || !(c_v > 0.0)) {
    throw InvalidParams("prior standard deviations must be > 0");
  }
  params.validate();
  const Eigen::Index dz = kind == ScenarioKind::LinearCV ? 2 : 1;
  if (sensor_cov.rows() != dz || sensor_cov.cols() != dz) {
    throw InvalidParams("sensor covariance has the wrong shape for this scenario");
  }
  if (!is_psd(sensor_cov, 0.0) || sensor_cov.diagonal().minCoeff() <= 0.0) {
    throw InvalidParams("sensor covariance must be positive definite");
  }
  const bool bearings = kind == ScenarioKind::BearingsOnly;
  if (bearings != initial_ownship.has_value() || bearings != omega.has_value()) {
    throw InvalidParams("ownship state and turn rate are required for, and only for, bearings-only");
  }
}

StateMat ScenarioSpec::prior_cov() const {
  StateVec d;
  d << c_r * c_r, c_v * c_v, c_r * c_r, c_v * c_v;
  return d.asDiagonal();
}

GaussianDensity ScenarioSpec::prior() const {
  return {nominal_state(*this, 0), prior_cov()};
}

BearingsScenarioModel ScenarioSpec::bearings_model() const {
  if (kind != ScenarioKind::BearingsOnly) {
    throw std::logic_error("bearings_model on a linear scenario");
  }
  BearingsScenarioModel m;
  m.omega = *omega;
  m.t_step = t_step;
  m.ownship0 = *initial_ownship;
  m.target0 = initial_target;
  m.sigma_z = std::sqrt(sensor_cov(0, 0));
  return m;
}

void ScenarioSpec::set_cardinality_errors(double factor) {
  StateVec e;
  e << c_r, c_v, c_r, c_v;
  params.e0 = factor * e;
  params.e1 = factor * e;
}

ScenarioSpec linear_default() {
  ScenarioSpec s;
  s.name = "linear";
  s.kind = ScenarioKind::LinearCV;
  s.t_step = 5.0;
  s.q = 1e-8;
  s.sensor_cov = Eigen::Matrix2d::Identity() * (25.0 * 25.0);
  s.c_r = 100.0;
  s.c_v = 5.0;
  s.initial_target = StateVec::Zero();
  s.scans = 10;
  s.params.b = 1.0;
  s.params.r = 1.0;
  s.params.pd = 0.8;
  s.set_cardinality_errors(1.0);
  return s;
}

ScenarioSpec bearings_default() {
  ScenarioSpec s;
  s.name = "bearings";
  s.kind = ScenarioKind::BearingsOnly;
  s.t_step = 30.0;
  s.q = 0.0;
  s.sensor_cov = Eigen::MatrixXd::Constant(1, 1, kDeg * kDeg);
  s.c_r = 10000.0;
  s.c_v = 100.0;
  s.initial_target << -25000.0, 150.0, 20000.0, 100.0;
  s.initial_ownship = StateVec{-30000.0, 200.0, 50000.0, 0.0};
  s.omega = 1.0125 * kDeg;
  s.scans = 20;
  s.params.b = 1.0;
  s.params.r = 1.0;
  s.params.pd = 0.9;
  s.set_cardinality_errors(1.0);
  return s;
}

StateVec nominal_state(const ScenarioSpec& spec, int k) {
  if (k < 0) {
    throw std::out_of_range("nominal_state: scan index must be >= 0");
  }
  if (spec.kind == ScenarioKind::LinearCV) {
    const StateMat f = cv_transition(spec.t_step);
    StateVec x = spec.initial_target;
    for (int i = 0; i < k; ++i) {
      x = f * x;
    }
    return x;
  }
  const BearingsScenarioModel m = spec.bearings_model();
  return target_at(m, k) - ownship_at(m, k);
}

ScanModel scan_models(const ScenarioSpec& spec, int k) {
  if (k < 1 || k > spec.scans) {
    throw std::out_of_range("scan_models: scan index outside [1, scans]");
  }
  ScanModel out;
  out.lg.f_mat = cv_transition(spec.t_step);
  out.lg.q_mat = cv_process_noise(spec.t_step, spec.q);
  out.lg.noiseless = spec.noiseless();
  out.lg.r_mat = spec.sensor_cov;
  if (spec.kind == ScenarioKind::LinearCV) {
    out.kind = MeasurementKind::Linear;
    out.lg.h_mat = Eigen::MatrixXd::Zero(2, kStateDim);
    out.lg.h_mat(0, 0) = 1.0;
    out.lg.h_mat(1, 2) = 1.0;
    return out;
  }
  const BearingsScenarioModel m = spec.bearings_model();
  out.kind = MeasurementKind::Bearing;
  out.offset = ownship_at(m, k) - out.lg.f_mat * ownship_at(m, k - 1);
  out.lg.h_mat = bearing_jacobian(nominal_state(spec, k));
  return out;
}

std::vector<ScanModel> scan_model_sequence(const ScenarioSpec& spec, int k_max) {
  std::vector<ScanModel> out;
  out.reserve(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) {
    out.push_back(scan_models(spec, k));
  }
  return out;
}

}  // namespace rfsbound
