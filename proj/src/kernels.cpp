#include "physid/kernels.hpp"

#include <stdexcept>
#include <vector>

namespace physid::kernels {

namespace {

Eigen::Index chunk_count(Eigen::Index cols) {
  return (cols + kChunkCols - 1) / kChunkCols;
}

}  // namespace

Eigen::MatrixXd gram_serial(const Eigen::MatrixXd& a) {
  const Eigen::Index nc = chunk_count(a.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), a.rows());
  for (Eigen::Index c = 0; c < nc; ++c) {
    const Eigen::Index begin = c * kChunkCols;
    const Eigen::Index len = std::min(kChunkCols, a.cols() - begin);
    const auto blk = a.middleCols(begin, len);
    out += blk * blk.transpose();
  }
  return out;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& a) {
  const Eigen::Index nc = chunk_count(a.cols());
  std::vector<Eigen::MatrixXd> partial(static_cast<size_t>(nc));
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < nc; ++c) {
    const Eigen::Index begin = c * kChunkCols;
    const Eigen::Index len = std::min(kChunkCols, a.cols() - begin);
    const auto blk = a.middleCols(begin, len);
    partial[static_cast<size_t>(c)] = blk * blk.transpose();
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), a.rows());
  for (Eigen::Index c = 0; c < nc; ++c) out += partial[static_cast<size_t>(c)];
  return out;
}

Eigen::MatrixXd cross_gram_serial(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("cross_gram: column counts differ");
  const Eigen::Index nc = chunk_count(a.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), b.rows());
  for (Eigen::Index c = 0; c < nc; ++c) {
    const Eigen::Index begin = c * kChunkCols;
    const Eigen::Index len = std::min(kChunkCols, a.cols() - begin);
    out += a.middleCols(begin, len) * b.middleCols(begin, len).transpose();
  }
  return out;
}

Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("cross_gram: column counts differ");
  const Eigen::Index nc = chunk_count(a.cols());
  std::vector<Eigen::MatrixXd> partial(static_cast<size_t>(nc));
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < nc; ++c) {
    const Eigen::Index begin = c * kChunkCols;
    const Eigen::Index len = std::min(kChunkCols, a.cols() - begin);
    partial[static_cast<size_t>(c)] =
        a.middleCols(begin, len) * b.middleCols(begin, len).transpose();
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), b.rows());
  for (Eigen::Index c = 0; c < nc; ++c) out += partial[static_cast<size_t>(c)];
  return out;
}

Eigen::MatrixXd left_apply_serial(const Eigen::MatrixXd& m, const Eigen::MatrixXd& x) {
  if (m.cols() != x.rows()) throw std::invalid_argument("left_apply: shape mismatch");
  Eigen::MatrixXd out(m.rows(), x.cols());
  const Eigen::Index nc = chunk_count(x.cols());
  for (Eigen::Index c = 0; c < nc; ++c) {
    const Eigen::Index begin = c * kChunkCols;
    const Eigen::Index len = std::min(kChunkCols, x.cols() - begin);
    out.middleCols(begin, len).noalias() = m * x.middleCols(begin, len);
  }
  return out;
}

Eigen::MatrixXd left_apply(const Eigen::MatrixXd& m, const Eigen::MatrixXd& x) {
  if (m.cols() != x.rows()) throw std::invalid_argument("left_apply: shape mismatch");
  Eigen::MatrixXd out(m.rows(), x.cols());
  const Eigen::Index nc = chunk_count(x.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < nc; ++c) {
    const Eigen::Index begin = c * kChunkCols;
    const Eigen::Index len = std::min(kChunkCols, x.cols() - begin);
    out.middleCols(begin, len).noalias() = m * x.middleCols(begin, len);
  }
  return out;
}

}  // namespace physid::kernels
