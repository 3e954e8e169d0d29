#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace physid::ssi {

/// Block Hankel partition of an output record. The stacked matrix
/// H = [Y_p; Y_f] is stored once; the shifted partitions are views:
/// Y_p^+ adds the first block row of Y_f to Y_p, Y_f^- drops it from Y_f.
struct HankelPartition {
  Eigen::MatrixXd H;  // 2 m i x j
  int m = 0;
  int i = 0;
  Eigen::Index j = 0;

  auto Yp() const { return H.topRows(static_cast<Eigen::Index>(m) * i); }
  auto Yf() const { return H.bottomRows(static_cast<Eigen::Index>(m) * i); }
  auto Yp_plus() const { return H.topRows(static_cast<Eigen::Index>(m) * (i + 1)); }
  auto Yf_minus() const { return H.bottomRows(static_cast<Eigen::Index>(m) * (i - 1)); }
};

/// j <= 0 selects the maximal column count N - 2i + 1.
HankelPartition block_hankel(const Eigen::MatrixXd& y, int i, Eigen::Index j = 0);

struct PersistentExcitation {
  Eigen::Index rank = 0;
  bool satisfied = false;
  Eigen::VectorXd gram_eigenvalues;
};

/// Rank of (1/N) U_{j,i,N} U^T against the full-rank value m*i.
PersistentExcitation pe_order(const Eigen::MatrixXd& u, int i, Eigen::Index from = 0,
                              double rank_tol = 1e-10);

/// Row-space projections O_i = Y_f / Y_p and O_{i-1} = Y_f^- / Y_p^+,
/// computed through a triangular factorization of the stacked data matrix
/// H / sqrt(j) = L Q^T. The projections are returned as cores with the
/// orthonormal right factor dropped: O_i = sqrt(j) * core_oi * Q^T, which
/// preserves singular values, left singular vectors, and all cross products
/// used downstream. When Y_p is numerically rank deficient the projection
/// falls back to the pseudo-inverse normal-equations form (diagnosed, not
/// fatal).
struct Projection {
  Eigen::MatrixXd L;         // 2mi x 2mi lower-triangular factor of H/sqrt(j)
  Eigen::MatrixXd core_oi;   // mi x 2mi
  Eigen::MatrixXd core_oim;  // m(i-1) x 2mi
  Eigen::MatrixXd Tfp;       // Y_f Y_p^T / j (lag covariance block Toeplitz)
  Eigen::MatrixXd Lambda0;   // averaged zero-lag output covariance
  int m = 0;
  int i = 0;
  Eigen::Index j = 0;
  Eigen::Index past_rank = 0;
  double past_condition = 0.0;
  bool pinv_fallback = false;
};

Projection project(const HankelPartition& h, double rank_tol = 1e-10);

/// Explicit mi x j projection matrix (recomputes the factorization; intended
/// for tests and small records).
Eigen::MatrixXd materialize_oi(const HankelPartition& h, double rank_tol = 1e-10);

struct WeightedSvd {
  Eigen::MatrixXd U1, V1;
  Eigen::VectorXd S1;
  Eigen::VectorXd singular_values;  // full spectrum
  Eigen::Index order = 0;
  Eigen::MatrixXd gamma;  // extended observability W1^{-1} U1 S1^{1/2}
};

/// SVD of W1 * O * W2 truncated at order_hint when given, otherwise at the
/// largest relative gap in the spectrum. Empty weights mean identity.
WeightedSvd weighted_svd(const Eigen::MatrixXd& o, const Eigen::MatrixXd& w1 = {},
                         const Eigen::MatrixXd& w2 = {}, Eigen::Index order_hint = 0);

struct StochasticRealization {
  Eigen::MatrixXd A_d, C_d;
  Eigen::MatrixXd G;        // next-state/output covariance
  Eigen::MatrixXd Lambda0;  // zero-lag output covariance
  Eigen::VectorXd d_offset;
  Eigen::VectorXd singular_values;
  Eigen::Index order = 0;
  double T_s = 0.0;
  double shift_condition = 0.0;  // condition of the observability shift solve
};

/// Covariance realization from the weighted SVD: Gamma from U1 S1^{1/2},
/// C from its first block row, A by shift-invariance least squares, G from
/// Gamma^dagger applied to the lag covariances.
StochasticRealization realize(const WeightedSvd& svd, const Projection& proj, double T_s,
                              const Eigen::VectorXd& d_offset = {});

struct RiccatiOptions {
  int max_iterations = 10000;
  double tol = 1e-10;
  // Innovation covariance floor, relative to trace(Lambda)/m. Deterministic
  // (noise-free) records drive the innovation covariance toward singularity;
  // the iteration stops there and keeps the last stabilizing gain.
  double floor_rel = 1e-12;
};

struct KalmanModel {
  Eigen::MatrixXd A_d, C_d;
  Eigen::MatrixXd K_f;
  Eigen::MatrixXd P;
  Eigen::MatrixXd innovation_cov;
  Eigen::VectorXd d_offset;
  int iterations = 0;
  bool converged = false;
  bool floor_stop = false;
  double residual = 0.0;            // relative fixed-point residual
  double rho_closed_loop = 0.0;     // spectral radius of A - K_f C
};

/// Forward algebraic Riccati equation by fixed-point iteration from P = 0;
/// steady-state gain K_f = (G - A P C^T)(Lambda - C P C^T)^{-1}.
KalmanModel solve_riccati(const StochasticRealization& re, const RiccatiOptions& opts = {});

struct StateSequence {
  Eigen::MatrixXd X;  // one predicted state per column
  Eigen::Index burn_in = 0;
};

/// Innovation-form filter x(k+1) = A x(k) + K_f (y(k) - d - C x(k)); returns
/// predicted states and a recommended burn-in from the closed-loop settling
/// length.
StateSequence kalman_states(const KalmanModel& km, const Eigen::MatrixXd& y,
                            const Eigen::VectorXd& x0 = {},
                            const Eigen::VectorXd& d_offset = {});

struct IdentifyOptions {
  int i = 0;               // block rows; 0 = ceil(1.5 * order / m) + 2
  Eigen::Index j = 0;      // columns; 0 = maximal
  Eigen::Index order_hint = 0;  // 0 = SVD gap detection
  Eigen::MatrixXd w1, w2;  // projection weights (empty = identity)
  double rank_tol = 1e-10;
};

struct IdentifyResult {
  StochasticRealization realization;
  Projection projection;
  int i = 0;
};

/// Output-only identification: demean, Hankel, project, weighted SVD,
/// realize. The removed mean is carried as d_offset.
IdentifyResult identify(const Eigen::MatrixXd& y, double T_s, const IdentifyOptions& opts);

}  // namespace physid::ssi
