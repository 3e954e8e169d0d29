#pragma once

#include <Eigen/Dense>

namespace physid::kernels {

// Column-chunked dense products used on long data records (Gram matrices of
// block Hankel data, covariance accumulation, mapping state sequences).
// Partial results are accumulated in a fixed chunk order, so the parallel
// versions are bitwise identical to the serial references for any thread
// count. Chunk size is fixed, not derived from the thread count.
inline constexpr Eigen::Index kChunkCols = 4096;

/// A * A^T over the columns of A (rows x N record).
Eigen::MatrixXd gram(const Eigen::MatrixXd& a);
Eigen::MatrixXd gram_serial(const Eigen::MatrixXd& a);

/// A * B^T where A and B share their column count.
Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
Eigen::MatrixXd cross_gram_serial(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// M * X, parallel over column chunks of X. Columns are independent, so
/// determinism needs no reduction ordering here.
Eigen::MatrixXd left_apply(const Eigen::MatrixXd& m, const Eigen::MatrixXd& x);
Eigen::MatrixXd left_apply_serial(const Eigen::MatrixXd& m, const Eigen::MatrixXd& x);

}  // namespace physid::kernels
