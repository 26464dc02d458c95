#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pmids {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Gaps are floored here before entering the trade-off formula.
inline constexpr double kGapFloor = 1e-12;

// Raised when every action with a positive gap carries zero information.
class HopelessProfile : public std::runtime_error {
 public:
  explicit HopelessProfile(const std::string& what) : std::runtime_error(what) {}
};

// Raised on malformed configuration or builder input.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

// log det of an SPD matrix; -inf if the factorization fails.
inline double logdet_spd(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return -kInf;
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// Orthonormal basis of the column span of `a`, singular values below
// rel_cutoff * sigma_max dropped.
inline Matrix column_span(const Matrix& a, double rel_cutoff = 1e-9) {
  if (a.cols() == 0 || a.rows() == 0) return Matrix(a.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return Matrix(a.rows(), 0);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > rel_cutoff * s(0)) ++r;
  return svd.matrixU().leftCols(r);
}

}  // namespace pmids
