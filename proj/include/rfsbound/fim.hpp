#pragma once

#include "rfsbound/models.hpp"
#include "rfsbound/numkernel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <stdexcept>
#include <vector>

namespace rfsbound {

class SingularF : public std::domain_error {
 public:
  SingularF() : std::domain_error("SingularF: transition matrix is not invertible") {}
};

/// Fisher information of a Gaussian prior.
template <typename Scalar, int D>
Mat<Scalar, D> initial_fim(const Mat<Scalar, D>& prior_cov) {
  return invert_spd(prior_cov);
}

namespace detail {

/// C with C^T C = m for a symmetric PSD m (negative rounding clamped).
template <typename Scalar, int D>
Mat<Scalar, D> psd_root(const Mat<Scalar, D>& m) {
  Eigen::SelfAdjointEigenSolver<Mat<Scalar, D>> eig(symmetrized(m));
  const Vec<Scalar, D> s = eig.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return s.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace detail

/// Information after a prediction step with no measurement:
///
///   Q^-1 - Q^-1 F [J + F^T Q^-1 F]^-1 F^T Q^-1
///
/// With Q = L L^T and G = L^-1 F the expression equals L^-T M L^-1 where
/// M = I - G (C^T C + G^T G)^-1 G^T and J = C^T C. M is the lower-right block
/// of the projector onto the orthogonal complement of range([C; G]), which a
/// complete Householder QR of the stacked matrix yields without the
/// cancellation the literal form suffers at small Q.
template <typename Scalar, int D>
Mat<Scalar, D> fim_predict(const Mat<Scalar, D>& j, const Mat<Scalar, D>& f,
                           const Mat<Scalar, D>& q) {
  constexpr int Stack = (D == Eigen::Dynamic) ? Eigen::Dynamic : 2 * D;
  const Eigen::Index n = j.rows();
  Eigen::LLT<Mat<Scalar, D>> llt(symmetrized(q));
  if (llt.info() != Eigen::Success) {
    throw NotSpd("process noise covariance");
  }
  const Mat<Scalar, D> l_inv =
      llt.matrixL().solve(Mat<Scalar, D>::Identity(n, n));
  const Mat<Scalar, D> g = l_inv * f;

  Eigen::Matrix<Scalar, Stack, D> stacked(2 * n, n);
  stacked.topRows(n) = detail::psd_root(j);
  stacked.bottomRows(n) = g;
  Eigen::HouseholderQR<Eigen::Matrix<Scalar, Stack, D>> qr(stacked);
  const Mat<Scalar, Stack> q_full = qr.householderQ();
  const Mat<Scalar, D> complement = q_full.bottomRightCorner(n, n);
  const Mat<Scalar, D> middle = complement * complement.transpose();

  Mat<Scalar, D> out = l_inv.transpose() * middle * l_inv;
  return symmetrized(out);
}

/// Predict step followed by the information of one detection, given as
/// H^T R^-1 H.
template <typename Scalar, int D>
Mat<Scalar, D> fim_update(const Mat<Scalar, D>& j, const Mat<Scalar, D>& f,
                          const Mat<Scalar, D>& q, const Mat<Scalar, D>& measurement_info) {
  Mat<Scalar, D> out = fim_predict(j, f, q) + measurement_info;
  return symmetrized(out);
}

template <typename Scalar, int D, typename HDerived, typename RDerived>
Mat<Scalar, D> fim_update(const Mat<Scalar, D>& j, const Mat<Scalar, D>& f,
                          const Mat<Scalar, D>& q, const Eigen::MatrixBase<HDerived>& h,
                          const Eigen::MatrixBase<RDerived>& r) {
  const auto r_inv = invert_spd(r);
  Mat<Scalar, D> info = h.transpose() * r_inv * h;
  return fim_update(j, f, q, Mat<Scalar, D>(symmetrized(info)));
}

/// Information propagation without process noise: F^-T J F^-1, plus the
/// measurement information when the scan produced a detection.
template <typename Scalar, int D>
Mat<Scalar, D> fim_noiseless(const Mat<Scalar, D>& j, const Mat<Scalar, D>& f,
                             const Mat<Scalar, D>* measurement_info = nullptr) {
  Eigen::FullPivLU<Mat<Scalar, D>> lu(f);
  if (!lu.isInvertible()) {
    throw SingularF();
  }
  const Mat<Scalar, D> f_inv = lu.inverse();
  Mat<Scalar, D> out = f_inv.transpose() * j * f_inv;
  if (measurement_info != nullptr) {
    out += *measurement_info;
  }
  return symmetrized(out);
}

struct FimLayer {
  int k = 0;
  std::vector<StateMat, Eigen::aligned_allocator<StateMat>> fims;
};

/// The two children of one information node for a given scan.
struct FimChildren {
  StateMat on_empty;
  StateMat on_detection;
};

/// Per-scan quantities the information recursion needs, precomputed once.
struct FimStep {
  StateMat f = StateMat::Identity();
  StateMat q = StateMat::Zero();
  StateMat measurement_info = StateMat::Zero();
  bool noiseless = false;
  StateMat f_inv = StateMat::Identity();  // noiseless path only

  static FimStep from(const ScanModel& model);
  FimChildren split(const StateMat& parent) const;
};

FimLayer initial_fim_layer(const StateMat& prior_cov);
FimLayer advance_fim_layer(const FimLayer& layer, const ScanModel& model);

}  // namespace rfsbound
