#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace physid::signal {

enum class Domain { continuous, discrete };

/// Autonomous state-space realization of a band-limited (quasi-)periodic
/// scalar signal: a DC state (optional) plus one 2x2 oscillator block per
/// spectral line. State dimension is 2*n_a - 1 for the harmonic form with
/// offset (lines at i*f_T, i = 1..n_a-1).
struct PeriodicSignalModel {
  Domain domain = Domain::continuous;
  double f_T = 0.0;         // fundamental frequency (Hz); 0 for free line sets
  int n_a = 1;              // harmonic-count parameter (offset + n_a-1 sinusoids)
  double T_s = 0.0;         // sampling time (discrete only)
  bool include_offset = true;
  std::vector<double> line_freqs_hz;  // oscillator line frequencies
  Eigen::MatrixXd A_u;
  Eigen::MatrixXd C_u;      // 1 x dim output row
  // The truncation residual e_o (the unmodeled part of the signal) is implied:
  // the model represents the retained lines only.

  Eigen::Index dim() const { return A_u.rows(); }
};

struct MimoSignalModel {
  std::vector<PeriodicSignalModel> channels;
  Eigen::MatrixXd A_u;  // block-diagonal stack
  Eigen::MatrixXd C_u;  // r x n_u, block-diagonal rows
  Eigen::Index n_u = 0;
  Domain domain = Domain::continuous;
  double T_s = 0.0;
};

/// Discrete autonomous model of a finite-length signal treated as one period
/// of length N*T_s: rotation blocks at angles i*2*pi/N.
struct FiniteLengthModel {
  Eigen::Index N = 0;
  double T_s = 0.0;
  int n_a = 1;
  Eigen::MatrixXd A_v;
  Eigen::MatrixXd C_v;
  double fundamental_hz() const { return 1.0 / (static_cast<double>(N) * T_s); }
  Eigen::Index dim() const { return A_v.rows(); }
};

/// Fourier coefficients of one period (offset a0, cosine a_n, sine b_n).
struct FourierCoefficients {
  double a0 = 0.0;
  Eigen::VectorXd a;
  Eigen::VectorXd b;
};

/// Continuous-time harmonic model: A_u = blkdiag(0, [[0, w_i], [-w_i, 0]]...)
/// with w_i = i*2*pi*f_T, C_u = (1, 1, 0, 1, 0, ...).
PeriodicSignalModel build_ct_periodic(double f_T_hz, int n_a, bool include_offset = true);

/// Discrete-time harmonic model: A_u = blkdiag(1, [[0, -1], [1, 2cos(w_i T_s)]]...).
/// Harmonics must stay below Nyquist.
PeriodicSignalModel build_dt_periodic(double f_T_hz, int n_a, double T_s,
                                      bool include_offset = true);

/// Continuous-time model with arbitrary spectral lines (the harmonic builders
/// are the special case line_freqs = {f_T, 2 f_T, ...}).
PeriodicSignalModel build_ct_lines(const std::vector<double>& line_freqs_hz,
                                   bool include_offset = true);

/// Finite-length model with fundamental 1/(N*T_s), rotation-form blocks.
FiniteLengthModel build_finite_length(Eigen::Index n_samples, double T_s, int n_a);

/// Block-diagonal MIMO stack; all channels must share domain (and T_s).
MimoSignalModel stack_mimo(const std::vector<PeriodicSignalModel>& channels);

/// Free simulation y(k) = C * A^k * x0 for k = 0..n-1.
Eigen::MatrixXd simulate_autonomous(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                                    const Eigen::VectorXd& x0, Eigen::Index n);

struct HarmonicDetection {
  double fundamental_hz = 0.0;        // 1/(N*T_s)
  std::vector<int> harmonics;         // retained harmonic indices (>= 1)
  std::vector<double> freqs_hz;       // harmonics * fundamental
  bool dc = false;                    // DC bin exceeded the threshold
  Eigen::VectorXd bin_power;          // periodogram power over the scanned bins
  int first_bin = 1;
};

struct HarmonicDetectionOptions {
  double energy_fraction = 1e-4;  // keep bins above this fraction of band energy
  double lo_hz = 0.0;             // scan band (0 = from the first bin)
  double hi_hz = 0.0;             // 0 = up to Nyquist
  int max_harmonics = 0;          // 0 = unlimited; otherwise keep the strongest
};

/// Blind-mode model order selection: retain harmonics of 1/(N*T_s) whose
/// periodogram energy exceeds a fraction of the total band energy.
HarmonicDetection detect_harmonics(const Eigen::MatrixXd& y, double T_s,
                                   const HarmonicDetectionOptions& opts = {});

/// DFT power of a multichannel record at one bin (Goertzel, summed over
/// channels), normalized by N^2.
double bin_power(const Eigen::MatrixXd& y, Eigen::Index bin);

}  // namespace physid::signal
