#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

namespace lumpgeo {

inline constexpr double kRankThreshold = 1e-10;

/// Numerical rank by column-pivoted QR; pivots below threshold * largest pivot count as zero.
inline int numerical_rank(const Eigen::MatrixXd& a, double threshold = kRankThreshold) {
  if (a.size() == 0) return 0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(threshold);
  return static_cast<int>(qr.rank());
}

/// Greedy selection of columns of `cols` that are independent modulo the span of `fixed`.
/// Columns are scanned left to right, so earlier columns win.
inline std::vector<int> independent_columns(const Eigen::MatrixXd& fixed, const Eigen::MatrixXd& cols,
                                            double threshold = kRankThreshold) {
  std::vector<int> keep;
  Eigen::MatrixXd acc = fixed;
  int rank = numerical_rank(acc, threshold);
  for (int j = 0; j < cols.cols(); ++j) {
    Eigen::MatrixXd trial(cols.rows(), acc.cols() + 1);
    if (acc.cols() > 0) trial.leftCols(acc.cols()) = acc;
    trial.col(acc.cols()) = cols.col(j);
    int r = numerical_rank(trial, threshold);
    if (r > rank) {
      acc = std::move(trial);
      rank = r;
      keep.push_back(j);
    }
  }
  return keep;
}

/// Horizontal concatenation helper.
inline Eigen::MatrixXd hcat(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() == 0) return b;
  if (b.cols() == 0) return a;
  Eigen::MatrixXd c(a.rows(), a.cols() + b.cols());
  c << a, b;
  return c;
}

}  // namespace lumpgeo
