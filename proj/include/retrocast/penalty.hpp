#pragma once

#include <Eigen/Dense>
#include <string>

#include "retrocast/errors.hpp"

namespace retrocast {

/// Regularization operators for the deconvolution penalty ||P u||.
enum class PenaltyKind { ridge, first_difference, second_difference };

inline std::string to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::ridge: return "ridge";
    case PenaltyKind::first_difference: return "first_difference";
    case PenaltyKind::second_difference: return "second_difference";
  }
  return "?";
}

inline PenaltyKind penalty_from_string(const std::string& s) {
  if (s == "ridge") return PenaltyKind::ridge;
  if (s == "first_difference") return PenaltyKind::first_difference;
  if (s == "second_difference") return PenaltyKind::second_difference;
  throw Error("unknown penalty kind '" + s + "'");
}

/// m x m penalty operator: the identity, the lower-bidiagonal first-difference
/// matrix (1 on the diagonal, -1 on the subdiagonal, first row (1, 0, ...)),
/// or its square for second differences. All three are invertible.
inline Eigen::MatrixXd penalty_matrix(PenaltyKind kind, int m) {
  if (m < 1) throw SizeTooSmall("penalty matrix needs m >= 1");
  if (kind == PenaltyKind::ridge) return Eigen::MatrixXd::Identity(m, m);
  if (m < 2) throw SizeTooSmall("difference penalty needs m >= 2");
  Eigen::MatrixXd delta = Eigen::MatrixXd::Identity(m, m);
  for (int i = 1; i < m; ++i) delta(i, i - 1) = -1.0;
  if (kind == PenaltyKind::first_difference) return delta;
  return delta * delta;
}

}  // namespace retrocast
