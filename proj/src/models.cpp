#include "rfsbound/models.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>

namespace rfsbound {

void BernoulliParams::validate() const {
  if (!(b >= 0.0 && b <= 1.0)) {
    throw InvalidParams("b must lie in [0, 1]");
  }
  if (!(r >= 0.0 && r <= 1.0)) {
    throw InvalidParams("r must lie in [0, 1]");
  }
  if (!(pd > 0.0 && pd < 1.0)) {
    throw InvalidParams("pd must lie in (0, 1)");
  }
  if (!e0.allFinite() || !e1.allFinite()) {
    throw InvalidParams("e0 and e1 must be finite");
  }
}

StateMat ScanModel::measurement_information() const {
  const Eigen::MatrixXd r_inv = invert_spd(lg.r_mat);
  StateMat info = lg.h_mat.transpose() * r_inv * lg.h_mat;
  return symmetrized(info);
}

MeasVec ScanModel::predict_measurement(const StateVec& x) const {
  if (kind == MeasurementKind::Bearing) {
    MeasVec z(1);
    z[0] = bearing(x);
    return z;
  }
  return lg.h_mat * x;
}

MeasVec ScanModel::residual(const MeasVec& z, const StateVec& x) const {
  MeasVec d = z - predict_measurement(x);
  if (kind == MeasurementKind::Bearing) {
    d[0] = wrap_angle(d[0]);
  }
  return d;
}

StateMat cv_transition(double t_step) {
  StateMat f = StateMat::Identity();
  f(0, 1) = t_step;
  f(2, 3) = t_step;
  return f;
}

StateMat cv_process_noise(double t_step, double q) {
  const double t2 = t_step * t_step;
  Eigen::Matrix2d block;
  block << t2 * t_step / 3.0, t2 / 2.0,
           t2 / 2.0, t_step;
  StateMat out = StateMat::Zero();
  out.block<2, 2>(0, 0) = q * block;
  out.block<2, 2>(2, 2) = q * block;
  return out;
}

StateMat BearingsScenarioModel::turn_matrix() const {
  const double wt = omega * t_step;
  double sin_over_w;
  double one_minus_cos_over_w;
  if (std::abs(wt) < 1e-6) {
    // Series expansion; exact CV limit as omega -> 0.
    sin_over_w = t_step * (1.0 - wt * wt / 6.0);
    one_minus_cos_over_w = wt * t_step / 2.0;
  } else {
    sin_over_w = std::sin(wt) / omega;
    one_minus_cos_over_w = (1.0 - std::cos(wt)) / omega;
  }
  const double c = std::cos(wt);
  const double s = std::sin(wt);
  StateMat m;
  m << 1, sin_over_w,           0, -one_minus_cos_over_w,
       0, c,                    0, -s,
       0, one_minus_cos_over_w, 1, sin_over_w,
       0, s,                    0, c;
  return m;
}

StateVec BearingsScenarioModel::ownship_state(int k) const {
  if (k < 1) {
    throw std::out_of_range("ownship_state: scan index must be >= 1");
  }
  const StateMat turn = turn_matrix();
  StateVec x = ownship0;
  for (int i = 1; i < k; ++i) {
    x = turn * x;
  }
  return x;
}

StateVec BearingsScenarioModel::target_state(int k) const {
  if (k < 1) {
    throw std::out_of_range("target_state: scan index must be >= 1");
  }
  const StateMat f = cv_transition(t_step);
  StateVec x = target0;
  for (int i = 1; i < k; ++i) {
    x = f * x;
  }
  return x;
}

StateVec BearingsScenarioModel::relative_offset(int k) const {
  const StateVec now = ownship_state(k);
  const StateVec next = turn_matrix() * now;
  StateVec u;
  u << next[0] - now[0] - t_step * now[1],
       next[1] - now[1],
       next[2] - now[2] - t_step * now[3],
       next[3] - now[3];
  return u;
}

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::remainder(a, 2.0 * pi);
  if (a <= -pi) {
    a += 2.0 * pi;
  }
  return a;
}

double bearing(const StateVec& x_rel) {
  const double chi = x_rel[0];
  const double gam = x_rel[2];
  if (chi == 0.0 && gam == 0.0) {
    throw OriginSingularity();
  }
  const double a = std::atan2(chi, gam);
  return a == -std::numbers::pi ? std::numbers::pi : a;
}

Eigen::RowVector4d bearing_jacobian(const StateVec& x_rel) {
  const double chi = x_rel[0];
  const double gam = x_rel[2];
  const double r2 = chi * chi + gam * gam;
  if (!(r2 > 0.0)) {
    throw OriginSingularity();
  }
  return {gam / r2, 0.0, -chi / r2, 0.0};
}

std::optional<StateVec> sample_transition(const std::optional<StateVec>& x_prev,
                                          const BernoulliParams& params, const ScanModel& model,
                                          const GaussianDensity& birth, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool keep = unif(rng) < params.r;
  if (x_prev) {
    if (!keep) {
      return std::nullopt;
    }
    const NormalSampler<kStateDim> noise(model.lg.noiseless ? StateMat::Zero() : model.lg.q_mat);
    StateVec next = model.lg.f_mat * *x_prev - model.offset + noise(rng);
    return next;
  }
  if (keep) {
    return std::nullopt;
  }
  const NormalSampler<kStateDim> draw(birth.cov);
  StateVec born = birth.mean + draw(rng);
  return born;
}

std::optional<MeasVec> sample_measurement(const std::optional<StateVec>& x,
                                          const BernoulliParams& params, const ScanModel& model,
                                          Rng& rng) {
  if (!x) {
    return std::nullopt;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (!(unif(rng) < params.pd)) {
    return std::nullopt;
  }
  const NormalSampler<Eigen::Dynamic> noise(model.lg.r_mat);
  MeasVec z = model.predict_measurement(*x) + noise(rng);
  if (model.kind == MeasurementKind::Bearing) {
    z[0] = wrap_angle(z[0]);
  }
  return z;
}

}  // namespace rfsbound
