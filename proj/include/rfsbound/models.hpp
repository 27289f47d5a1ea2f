#pragma once

#include "rfsbound/numkernel.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <optional>
#include <random>
#include <stdexcept>
#include <string>

namespace rfsbound {

using Rng = std::mt19937_64;
using MeasVec = Eigen::VectorXd;

class InvalidParams : public std::invalid_argument {
 public:
  explicit InvalidParams(const std::string& what) : std::invalid_argument("InvalidParams: " + what) {}
};

class OriginSingularity : public std::domain_error {
 public:
  OriginSingularity() : std::domain_error("OriginSingularity: relative position is at the sensor") {}
};

/// Parameters of the Bernoulli existence chain and the cardinality-mismatch
/// error vectors.
///
/// `e0` is charged when an estimate is reported while no target exists,
/// `e1` when the target exists but the estimate is empty.
struct BernoulliParams {
  double b = 1.0;   ///< existence probability of the prior
  double r = 1.0;   ///< maintenance probability (survive, or stay empty)
  double pd = 0.8;  ///< detection probability, strictly inside (0, 1)
  StateVec e0 = StateVec::Zero();
  StateVec e1 = StateVec::Zero();

  void validate() const;
};

/// Gaussian density used for the prior and for births.
struct GaussianDensity {
  StateVec mean = StateVec::Zero();
  StateMat cov = StateMat::Identity();
};

struct LinearGaussianModel {
  StateMat f_mat = StateMat::Identity();
  StateMat q_mat = StateMat::Zero();
  Eigen::MatrixXd h_mat;  // d_z x 4
  Eigen::MatrixXd r_mat;  // d_z x d_z
  bool noiseless = false;
};

enum class MeasurementKind { Linear, Bearing };

/// Everything needed to move from scan k-1 to scan k and to observe at k.
/// The state moves as x_k = F x_{k-1} - offset + w. For bearings the
/// measurement matrix is the Jacobian at the nominal relative state.
struct ScanModel {
  LinearGaussianModel lg;
  StateVec offset = StateVec::Zero();
  MeasurementKind kind = MeasurementKind::Linear;

  /// H^T R^{-1} H.
  StateMat measurement_information() const;
  MeasVec predict_measurement(const StateVec& x) const;
  /// Measurement residual z - h(x), angle-wrapped for bearings.
  MeasVec residual(const MeasVec& z, const StateVec& x) const;
};

/// Ownship on a circular orbit, target on a straight line; the tracked state
/// is the relative vector target - ownship.
struct BearingsScenarioModel {
  double omega = 0.0;   // rad/s
  double t_step = 1.0;  // s
  StateVec ownship0 = StateVec::Zero();
  StateVec target0 = StateVec::Zero();
  double sigma_z = 0.0;  // rad

  /// Coordinated-turn transition applied to the ownship each scan.
  StateMat turn_matrix() const;
  /// Ownship state at scan k (k >= 1, ownship0 is scan 1).
  StateVec ownship_state(int k) const;
  /// U_{k,k+1} = x^o_{k+1} - F x^o_k in the relative dynamics.
  StateVec relative_offset(int k) const;
  StateVec target_state(int k) const;
  StateVec relative_state(int k) const { return target_state(k) - ownship_state(k); }
};

StateMat cv_transition(double t_step);
StateMat cv_process_noise(double t_step, double q);

/// Angle of (chi, gamma) measured from the +y axis, range (-pi, pi].
double bearing(const StateVec& x_rel);
Eigen::RowVector4d bearing_jacobian(const StateVec& x_rel);

double wrap_angle(double a);

/// Multivariate normal sampler with a precomputed symmetric square root, so
/// singular (including zero) covariances are allowed.
template <int Dim>
class NormalSampler {
 public:
  using VecT = Vec<double, Dim>;
  using MatT = Mat<double, Dim>;

  NormalSampler() = default;
  explicit NormalSampler(const MatT& cov) : factor_(square_root(cov)) {}

  VecT operator()(Rng& rng) const {
    std::normal_distribution<double> unit;
    VecT n(factor_.rows());
    for (Eigen::Index i = 0; i < n.size(); ++i) {
      n[i] = unit(rng);
    }
    return factor_ * n;
  }

  const MatT& factor() const { return factor_; }

 private:
  static MatT square_root(const MatT& cov) {
    Eigen::SelfAdjointEigenSolver<MatT> eig(symmetrized(cov));
    const VecT sqrt_vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * sqrt_vals.asDiagonal() * eig.eigenvectors().transpose();
  }
  MatT factor_;
};

/// Draws X_{k} given X_{k-1}: survive with probability r and move, or, when
/// empty, give birth from `birth` with probability 1 - r.
std::optional<StateVec> sample_transition(const std::optional<StateVec>& x_prev,
                                          const BernoulliParams& params, const ScanModel& model,
                                          const GaussianDensity& birth, Rng& rng);

/// Empty when the state is empty; otherwise a noisy measurement with
/// probability pd.
std::optional<MeasVec> sample_measurement(const std::optional<StateVec>& x,
                                          const BernoulliParams& params, const ScanModel& model,
                                          Rng& rng);

}  // namespace rfsbound
