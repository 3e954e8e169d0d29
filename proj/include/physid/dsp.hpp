#pragma once

#include <Eigen/Dense>
#include <vector>

namespace physid::dsp {

struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;  // denominator, a0 normalized to 1
};

/// Butterworth low-pass / high-pass biquad cascades (bilinear transform with
/// prewarping). order must be even.
std::vector<Biquad> butterworth_lowpass(double cutoff_hz, double fs_hz, int order);
std::vector<Biquad> butterworth_highpass(double cutoff_hz, double fs_hz, int order);

/// Single-pass cascade filtering of one channel.
Eigen::RowVectorXd filter(const std::vector<Biquad>& cascade, const Eigen::RowVectorXd& x);

/// Zero-phase forward-backward band-pass (high-pass at lo_hz, low-pass at
/// hi_hz, each of the given even order) with reflective edge padding.
/// 0 <= lo < hi < Nyquist.
Eigen::MatrixXd bandpass(const Eigen::MatrixXd& y, double fs_hz, double lo_hz, double hi_hz,
                         int order = 4);

}  // namespace physid::dsp
