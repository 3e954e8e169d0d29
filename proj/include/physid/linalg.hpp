#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace physid::linalg {

/// Eigenvector matrix too ill-conditioned to invert: the input is (numerically)
/// defective and has no usable real modal decomposition.
struct DefectiveMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Principal matrix logarithm requested for a matrix with an eigenvalue on the
/// closed negative real axis (or at zero).
struct LogDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct JordanBlock {
  enum class Kind { real, complex_pair };
  Kind kind = Kind::real;
  double sigma = 0.0;    // real part of the eigenvalue
  double omega = 0.0;    // imaginary part magnitude, 0 for real blocks
  int multiplicity = 1;  // repeat count of the eigenvalue
  Eigen::Index span_begin = 0;  // first row/column of the block inside J
  Eigen::Index span_len = 0;    // multiplicity * (1 real, 2 complex pair)

  double frequency_hz() const { return omega / (2.0 * EIGEN_PI); }
  double damping_ratio() const {
    const double mag = std::hypot(sigma, omega);
    return mag > 0.0 ? std::abs(sigma) / mag : 1.0;
  }
};

/// Real modal/Jordan data: T * J * T^{-1} reconstructs the input matrix.
/// J is block diagonal with scalars for real eigenvalues and 2x2 blocks
/// [[sigma, omega], [-omega, sigma]] for complex conjugate pairs; repeated
/// eigenvalues appear as repeated diagonal blocks (the decomposition rejects
/// genuinely defective input rather than building identity super-blocks).
struct JordanDecomposition {
  Eigen::MatrixXd T;
  Eigen::MatrixXd J;
  std::vector<JordanBlock> blocks;
};

struct LeastSquaresSolution {
  Eigen::VectorXd x;
  Eigen::Index rank = 0;
  double residual = 0.0;   // 2-norm of V*x - w
  double condition = 0.0;  // largest / smallest retained singular value
  bool full_column_rank = false;
};

inline constexpr double kDefaultPinvTol = 1e-10;
inline constexpr double kDefaultClusterTol = 1e-6;
inline constexpr double kDefaultConditionCap = 1e12;

/// Kronecker product, shape (rA*rB) x (cA*cB).
Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Column-stacking vectorization.
Eigen::VectorXd vec(const Eigen::MatrixXd& a);

/// Inverse of vec for a known target shape.
Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols);

/// SVD pseudo-inverse; singular values below tol * sigma_max are truncated.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& a, double tol = kDefaultPinvTol);

/// Minimum-norm least squares x = pinv(V) * w with rank/residual/condition
/// diagnostics. Rank deficiency is reported, never thrown.
LeastSquaresSolution solve_lsq(const Eigen::MatrixXd& v, const Eigen::VectorXd& w,
                               double tol = kDefaultPinvTol);

/// Real Jordan decomposition. Eigenvalues within tol * spectral scale of each
/// other are clustered as repeats; blocks are sorted by omega ascending, then
/// sigma descending, then original index. Throws DefectiveMatrixError when the
/// eigenvector matrix condition exceeds cond_cap.
JordanDecomposition real_jordan(const Eigen::MatrixXd& a,
                                double tol = kDefaultClusterTol,
                                double cond_cap = kDefaultConditionCap);

/// Real principal matrix logarithm computed through the real Jordan route:
/// scalar logs on positive real eigenvalues, analytic logs of the 2x2 spiral
/// blocks. Eigenvalues within unit_tol of +1 map to exactly 0 (the discrete
/// DC block carve-out). Throws LogDomainError on eigenvalues <= 0.
Eigen::MatrixXd principal_log(const Eigen::MatrixXd& a, double unit_tol = 0.0);

/// Rebuilds the block-diagonal J matrix from block descriptors (used after
/// editing block eigenvalues, e.g. stability reflection).
Eigen::MatrixXd jordan_matrix(const std::vector<JordanBlock>& blocks);

/// Condition number from the singular values of a (0 if empty, inf-like cap on
/// exact singularity).
double condition_number(const Eigen::MatrixXd& a);

struct InitialStateFit {
  Eigen::VectorXd x0;
  double residual_rms = 0.0;  // RMS of y(k) - C A^k x0 over the fit window
  Eigen::Index rank = 0;
};

/// Least-squares x0 such that C A^k x0 tracks the record columns y(:,k),
/// accumulated over min(max_samples, cols) samples (all columns if
/// max_samples <= 0). Normal-equation accumulation; A^k is never formed.
InitialStateFit fit_initial_state(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                                  const Eigen::MatrixXd& y,
                                  Eigen::Index max_samples = -1,
                                  double tol = kDefaultPinvTol);

}  // namespace physid::linalg
