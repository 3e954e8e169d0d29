#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "physid/linalg.hpp"
#include "physid/mech_sim.hpp"
#include "physid/ssi.hpp"

namespace physid::recovery {

/// (A_a, C_a) in continuous time: A_a = ln(A_a^d) / T_s block-wise through the
/// real Jordan route, C_a unchanged. Discrete eigenvalues within unit_tol of
/// +1 (the DC signal block) map to 0 before the general log.
struct ContinuousModel {
  Eigen::MatrixXd A_a, C_a;
};
ContinuousModel to_continuous(const ssi::StochasticRealization& re, double T_s,
                              double unit_tol = 1e-8);

struct BlockMatchOptions {
  double tol_hz = 0.0;  // frequency matching window (must be set by the caller)
  // strict: any surplus candidate inside the window is an error (the paper's
  // remedy is to change the excitation frequencies). damping_tiebreak: when a
  // window over-matches, route the least-damped candidates to the signal side
  // if that choice is decisive.
  enum class Policy { strict, damping_tiebreak };
  Policy policy = Policy::strict;
  double zeta_separation = 0.2;  // tiebreak decisive iff zeta_taken <= sep * zeta_rejected
};

/// Jordan data of the augmented model split into structural and input-signal
/// parts, with the output row and initial state carried through the same
/// transforms.
struct SeparatedJordan {
  Eigen::MatrixXd J_s, J_u;
  Eigen::MatrixXd Cbar_s, Cbar_u;
  Eigen::VectorXd xbar0_s, xbar0_u;
  Eigen::MatrixXd T_a;  // Jordan transform of A_a
  Eigen::MatrixXd T_J;  // block permutation applied after T_a
  std::vector<linalg::JordanBlock> blocks_s, blocks_u;
  std::vector<std::string> warnings;

  Eigen::Index structural_dim() const { return J_s.rows(); }
  Eigen::Index signal_dim() const { return J_u.rows(); }
  /// Maps identified-basis states to the signal part of the separated Jordan
  /// basis (rows n_u x p).
  Eigen::MatrixXd signal_state_map() const;
};

/// Sorts the real Jordan blocks of A_a into signal blocks (those matching a
/// configured input frequency, or DC) and structural blocks (the rest).
SeparatedJordan separate_blocks(const Eigen::MatrixXd& a_a, const Eigen::MatrixXd& c_a,
                                const Eigen::VectorXd& x0,
                                const std::vector<double>& input_freqs_hz, bool dc,
                                const BlockMatchOptions& opts);

struct Mode {
  double sigma = 0.0;
  double omega = 0.0;
  double f_nat_rad_s = 0.0;
  double f_nat_hz = 0.0;
  double zeta = 0.0;
  Eigen::VectorXcd shape;  // displacement-coordinate eigenvector (may be empty)
};

/// Natural frequencies sqrt(sigma^2 + omega^2) and damping ratios
/// |sigma|/f_nat per structural block; real poles report omega = 0, zeta = 1.
std::vector<Mode> modal_params(const SeparatedJordan& sj);

struct TransformSolve {
  Eigen::MatrixXd value;
  Eigen::Index rank = 0;
  double condition = 0.0;
  double residual = 0.0;
  bool full_column_rank = false;
};

/// Physical similarity transform T_s from the structural Jordan data: the
/// state-structure equations give the lower partitions in terms of the upper
/// ones, the output equations pin the rest; assembled into one linear system
/// by the vec/kron rule and solved in least squares. A rank-deficient system
/// is reported in the diagnostics (the remedy is a different sensor set).
TransformSolve solve_Ts(const SeparatedJordan& sj, const mech::SensorConfig& sensors);

/// Roth coupling block X from the structural/signal cross equations; a
/// rank-deficient coefficient matrix throws (the remedy is different input
/// frequency content).
TransformSolve solve_X(const SeparatedJordan& sj, const Eigen::MatrixXd& t_s_hat,
                       const mech::SensorConfig& sensors);

struct PhysicalEstimate {
  Eigen::MatrixXd A_s_hat, C_s_hat;
  Eigen::MatrixXd B_s_hat, D_s_hat;  // empty until estimate_Bs
  Eigen::MatrixXd K_norm, D_norm;
  Eigen::MatrixXd B_norm;            // empty until estimate_Bs
  Eigen::MatrixXd T_s_hat, X_hat;
  std::vector<Mode> modes;
  double structural_residual = 0.0;  // || top blocks - (0, I) ||_F
  int reflected_modes = 0;           // poles mirrored by stability enforcement
  TransformSolve ts_diag, x_diag;
};

/// A_s = T_s J_s T_s^{-1}, C_s = Cbar_s T_s^{-1}; normalized stiffness and
/// damping read off the lower blocks with the sign flip of the first-order
/// form. Optional stability enforcement mirrors right-half-plane poles.
PhysicalEstimate assemble_physical(const SeparatedJordan& sj, const TransformSolve& ts,
                                   const TransformSolve& x,
                                   const mech::SensorConfig& sensors,
                                   bool stability_enforce = false);

struct InputReconstruction {
  Eigen::MatrixXd fe_full;  // 2n x N, B_s u(k) in the physical basis
  Eigen::MatrixXd fe;       // n x N, the lower (normalized effective input) block
  Eigen::MatrixXd xu;       // n_u x N signal states in the separated basis
  Eigen::Index valid_from = 0;
};

/// Effective input from the filtered state path (never by free propagation of
/// the marginally stable signal block): f_e(k) = T_s(-J_s X + X J_u) xu(k).
InputReconstruction reconstruct_input(const SeparatedJordan& sj,
                                      const Eigen::MatrixXd& t_s_hat,
                                      const Eigen::MatrixXd& x_hat,
                                      const Eigen::MatrixXd& states,
                                      Eigen::Index burn_in);

struct InputMatrixEstimate {
  Eigen::MatrixXd B_s_hat;  // 2n x r
  Eigen::MatrixXd D_s_hat;  // m x r
};

/// Least-squares input influence B_s = F_e U^+ (known-input mode only);
/// requires U persistently exciting of order 1.
InputMatrixEstimate estimate_Bs(const Eigen::MatrixXd& fe_full, const Eigen::MatrixXd& u,
                                const mech::SensorConfig& sensors,
                                Eigen::Index valid_from = 0);

struct ObservabilityCheck {
  bool observable = false;
  std::string reason;
};

/// Observability of the augmented model by input/output counts: r < m
/// observable, r > m not observable, r = m observable for pure full-rank
/// acceleration sensing.
ObservabilityCheck check_observability(Eigen::Index n, Eigen::Index r, Eigen::Index m,
                                       const mech::SensorConfig& sensors);

}  // namespace physid::recovery
