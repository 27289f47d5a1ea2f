#pragma once

#include "rfsbound/models.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rfsbound {

enum class ScenarioKind { LinearCV, BearingsOnly };

/// One experiment: dynamics, sensor, prior and Bernoulli parameters.
///
/// For LinearCV the state is absolute and `initial_target` is the prior mean
/// at scan 0. For BearingsOnly the state is relative (target - ownship);
/// `initial_target` and `initial_ownship` are the true states at scan 1 and
/// the nominal relative trajectory built from them drives the Jacobians.
struct ScenarioSpec {
  std::string name;
  ScenarioKind kind = ScenarioKind::LinearCV;
  double t_step = 5.0;      // s
  double q = 0.0;           // process-noise intensity
  Eigen::MatrixXd sensor_cov;  // R: 2x2 position (m^2) or 1x1 bearing (rad^2)
  double c_r = 100.0;       // prior position std, m
  double c_v = 5.0;         // prior velocity std, m/s
  StateVec initial_target = StateVec::Zero();
  std::optional<StateVec> initial_ownship;
  std::optional<double> omega;  // rad/s
  int scans = 10;
  BernoulliParams params;

  void validate() const;
  bool noiseless() const { return q == 0.0; }
  StateMat prior_cov() const;
  /// Prior (and birth) density at scan 0.
  GaussianDensity prior() const;
  BearingsScenarioModel bearings_model() const;
  /// e0 = e1 = [c_r, c_v, c_r, c_v] scaled by `factor`.
  void set_cardinality_errors(double factor);
};

ScenarioSpec linear_default();
ScenarioSpec bearings_default();

/// Transition from scan k-1 to k and the measurement model at scan k.
ScanModel scan_models(const ScenarioSpec& spec, int k);
std::vector<ScanModel> scan_model_sequence(const ScenarioSpec& spec, int k_max);

/// Nominal (noise-free) state at scan k >= 0 in the tracked coordinates.
StateVec nominal_state(const ScenarioSpec& spec, int k);

const char* to_string(ScenarioKind kind);

}  // namespace rfsbound
