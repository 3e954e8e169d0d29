#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "physid/signal_model.hpp"

namespace physid::mech {

/// n-DOF mass-spring-damper chain. Stiffness/damping vectors hold n+1 entries
/// (wall anchors at both ends); when the last anchor is absent the trailing
/// entries are zero.
struct ChainSpec {
  Eigen::VectorXd masses;       // m_1..m_n, kg
  Eigen::VectorXd stiffnesses;  // k_1..k_{n+1}, N/m
  Eigen::VectorXd dampers;      // d_1..d_{n+1}, N s/m (ignored in Rayleigh mode)
  bool rayleigh = false;
  double rayleigh_epsilon = 0.0;  // 1/s
  double rayleigh_nu = 0.0;       // s
  bool include_last_anchor = true;
  Eigen::MatrixXd input_influence;  // n x r; defaults to force on the first mass

  Eigen::Index dof() const { return masses.size(); }
};

struct MechanicalSystem {
  Eigen::MatrixXd M, D, K;
  Eigen::MatrixXd B_influence;  // n x r

  Eigen::MatrixXd k_norm() const;  // M^{-1} K
  Eigen::MatrixXd d_norm() const;  // M^{-1} D
  Eigen::MatrixXd b_norm() const;  // M^{-1} B
  Eigen::Index dof() const { return M.rows(); }
};

struct SensorConfig {
  Eigen::MatrixXd C_p, C_v, C_ac;  // m x n sensitivity matrices
  std::optional<double> noise_snr_db;

  /// Full acceleration sensing, C_p = C_v = 0, C_ac = I (the paper's default).
  static SensorConfig acceleration(Eigen::Index n);
  Eigen::Index outputs() const { return C_ac.rows(); }
};

struct PlantStateSpace {
  Eigen::MatrixXd A, B, C, D;
  signal::Domain domain = signal::Domain::continuous;
  double T_s = 0.0;
  Eigen::Index dof() const { return A.rows() / 2; }
};

struct AugmentedModel {
  Eigen::MatrixXd A, C;
  Eigen::MatrixXd K_a;  // noise input distribution (B_s stacked on zeros)
  Eigen::MatrixXd V_a;  // direct noise feedthrough (D_s)
  Eigen::Index plant_dim = 0;
  Eigen::Index signal_dim = 0;
  signal::Domain domain = signal::Domain::continuous;
  double T_s = 0.0;
};

MechanicalSystem build_chain(const ChainSpec& spec);

/// First-order form in physical coordinates:
/// A = [0 I; -K_n -D_n], B = [0; B_n], C = (C_p - C_ac K_n, C_v - C_ac D_n),
/// D = C_ac B_n with K_n = M^{-1}K etc.
PlantStateSpace to_state_space(const MechanicalSystem& sys, const SensorConfig& sensors);

/// Zero-order-hold discretization through the augmented matrix exponential;
/// C and D are unchanged.
PlantStateSpace discretize(const PlantStateSpace& plant, double T_s);

/// exp(A * T_s) for autonomous (augmented) models.
Eigen::MatrixXd discretize_autonomous(const Eigen::MatrixXd& a, double T_s);

/// Plant + signal model augmentation (block upper-triangular A, stacked C).
AugmentedModel augment(const PlantStateSpace& plant, const signal::MimoSignalModel& sig);

struct SimRecord {
  Eigen::VectorXd t;
  Eigen::MatrixXd u;   // r x N
  Eigen::MatrixXd y;   // m x N
  Eigen::MatrixXd fe;  // n x N effective input B*u
  Eigen::MatrixXd x;   // plant state history, 2n x N
  double T_s = 0.0;
  Eigen::Index samples() const { return t.size(); }
};

/// Discrete simulation x(k+1) = A x(k) + B u(k), y = C x + D u + e_m with
/// white Gaussian e_m scaled per channel to the configured SNR. Bitwise
/// deterministic for a fixed seed.
SimRecord simulate(const PlantStateSpace& plant_d, const Eigen::MatrixXd& u,
                   const SensorConfig& sensors, std::uint64_t seed,
                   const Eigen::MatrixXd& b_influence,
                   const Eigen::VectorXd& x0 = Eigen::VectorXd());

struct MultisineSpec {
  double offset = 0.0;
  std::vector<double> freqs_hz;
  std::vector<double> amps;
  std::vector<double> phases;
};

/// u(k) = offset + sum_i amps[i] * sin(2 pi f_i k T_s + phases[i]).
Eigen::RowVectorXd multisine(const MultisineSpec& spec, Eigen::Index n_samples, double T_s);

/// Signal-model initial state reproducing the multisine exactly under free
/// simulation of the continuous-time line model.
Eigen::VectorXd multisine_initial_state(const MultisineSpec& spec);

/// Continuous-time line model of a multisine (offset state present iff the
/// spec carries a nonzero offset or force_offset is set).
signal::PeriodicSignalModel multisine_ct_model(const MultisineSpec& spec,
                                               bool force_offset = false);

/// Exact sampled response of the continuous-time plant under multisine
/// excitation: the augmented autonomous system is discretized once by matrix
/// exponential and propagated, so the record carries no input-hold error.
SimRecord generate_periodic_dataset(const MechanicalSystem& sys, const SensorConfig& sensors,
                                    const std::vector<MultisineSpec>& inputs,
                                    Eigen::Index n_samples, double T_s, std::uint64_t seed);

/// Random zero-mean band-limited input: one spectral line per harmonic of
/// 1/(N*T_s) inside [lo_hz, hi_hz], random amplitudes and phases, scaled to
/// the requested RMS. Within the record this is a non-periodic waveform (its
/// period is the whole record).
MultisineSpec random_band_limited_spec(double lo_hz, double hi_hz, Eigen::Index n_samples,
                                       double T_s, double rms, std::uint64_t seed);

}  // namespace physid::mech
