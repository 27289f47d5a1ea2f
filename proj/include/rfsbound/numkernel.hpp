#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace rfsbound {

/// Both scenarios track [x, vx, y, vy].
inline constexpr int kStateDim = 4;

template <typename Scalar, int Dim = Eigen::Dynamic>
using Mat = Eigen::Matrix<Scalar, Dim, Dim>;

template <typename Scalar, int Dim = Eigen::Dynamic>
using Vec = Eigen::Matrix<Scalar, Dim, 1>;

using StateMat = Mat<double, kStateDim>;
using StateVec = Vec<double, kStateDim>;

class NotSpd : public std::runtime_error {
 public:
  explicit NotSpd(const std::string& what) : std::runtime_error("NotSpd: " + what) {}
};

/// Neumaier-compensated left-to-right sum of the diagonal.
template <typename Derived>
typename Derived::Scalar trace(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Scalar sum{0};
  Scalar comp{0};
  const Eigen::Index n = std::min(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar x = m(i, i);
    const Scalar t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

template <typename Derived>
auto outer(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  constexpr int N = Derived::RowsAtCompileTime;
  Mat<Scalar, N> out = v * v.transpose();
  return out;
}

template <typename Derived>
typename Derived::PlainObject symmetrized(const Eigen::MatrixBase<Derived>& m) {
  return (m + m.transpose()) / typename Derived::Scalar(2);
}

template <typename Derived>
typename Derived::Scalar max_abs_diagonal(const Eigen::MatrixBase<Derived>& m) {
  return m.diagonal().cwiseAbs().maxCoeff();
}

/// Inverse of a symmetric positive definite matrix via pivoted LDLT.
/// Throws NotSpd when the input is visibly asymmetric or a pivot is not
/// strictly positive.
template <typename Derived>
typename Derived::PlainObject invert_spd(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using Plain = typename Derived::PlainObject;
  if (m.rows() != m.cols()) {
    throw NotSpd("matrix is not square");
  }
  const Scalar scale = m.cwiseAbs().maxCoeff();
  if (!std::isfinite(scale)) {
    throw NotSpd("non-finite entry");
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-9) * scale) {
    throw NotSpd("matrix is not symmetric");
  }
  const Plain sym = symmetrized(m);
  Eigen::LDLT<Plain> ldlt(sym);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > Scalar(0)).all()) {
    throw NotSpd("non-positive pivot in symmetric factorization");
  }
  Plain inv = ldlt.solve(Plain::Identity(m.rows(), m.cols()));
  inv = symmetrized(inv);
  if (!inv.allFinite()) {
    throw NotSpd("inverse is not finite");
  }
  return inv;
}

/// Neumaier-compensated running sum.
template <typename Scalar>
struct CompensatedSum {
  Scalar sum{0};
  Scalar comp{0};

  void add(Scalar x) {
    const Scalar t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  Scalar value() const { return sum + comp; }
};

/// True iff every eigenvalue is >= -tol * max|m_ii|, tested through the
/// pivots of an LDLT factorization (Sylvester inertia).
template <typename Derived>
bool is_psd(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar tol) {
  using Scalar = typename Derived::Scalar;
  using Plain = typename Derived::PlainObject;
  if (m.rows() != m.cols() || !m.allFinite()) {
    return false;
  }
  const Scalar scale = max_abs_diagonal(m);
  if (scale == Scalar(0)) {
    // A PSD matrix with zero diagonal is the zero matrix.
    return m.cwiseAbs().maxCoeff() <= tol;
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale + Scalar(1e-12) * scale) {
    return false;
  }
  // Eigen flags semidefinite input as a numerical issue once it meets a zero
  // pivot, so the pivots alone decide.
  Eigen::LDLT<Plain> ldlt(symmetrized(m));
  const auto d = ldlt.vectorD();
  return d.allFinite() && d.minCoeff() >= -tol * scale;
}

}  // namespace rfsbound
