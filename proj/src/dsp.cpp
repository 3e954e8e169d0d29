#include "physid/dsp.hpp"

#include <cmath>
#include <stdexcept>

namespace physid::dsp {

namespace {

// Analog Butterworth pole pair quality factors for an even-order prototype:
// Q_k = 1 / (2 sin(theta_k)), theta_k = pi (2k + 1) / (2 order).
std::vector<double> butterworth_qs(int order) {
  if (order < 2 || order % 2 != 0)
    throw std::invalid_argument("butterworth: order must be even and >= 2");
  std::vector<double> qs;
  for (int k = 0; k < order / 2; ++k) {
    const double theta = EIGEN_PI * (2.0 * k + 1.0) / (2.0 * order);
    qs.push_back(1.0 / (2.0 * std::sin(theta)));
  }
  return qs;
}

double prewarp(double cutoff_hz, double fs_hz) {
  if (!(cutoff_hz > 0.0 && cutoff_hz < 0.5 * fs_hz))
    throw std::invalid_argument("butterworth: cutoff outside (0, Nyquist)");
  return std::tan(EIGEN_PI * cutoff_hz / fs_hz);
}

}  // namespace

std::vector<Biquad> butterworth_lowpass(double cutoff_hz, double fs_hz, int order) {
  const double w = prewarp(cutoff_hz, fs_hz);
  std::vector<Biquad> cascade;
  for (double q : butterworth_qs(order)) {
    const double a0 = w * w + w / q + 1.0;
    Biquad bq;
    bq.b0 = w * w / a0;
    bq.b1 = 2.0 * bq.b0;
    bq.b2 = bq.b0;
    bq.a1 = 2.0 * (w * w - 1.0) / a0;
    bq.a2 = (w * w - w / q + 1.0) / a0;
    cascade.push_back(bq);
  }
  return cascade;
}

std::vector<Biquad> butterworth_highpass(double cutoff_hz, double fs_hz, int order) {
  const double w = prewarp(cutoff_hz, fs_hz);
  std::vector<Biquad> cascade;
  for (double q : butterworth_qs(order)) {
    const double a0 = w * w + w / q + 1.0;
    Biquad bq;
    bq.b0 = 1.0 / a0;
    bq.b1 = -2.0 * bq.b0;
    bq.b2 = bq.b0;
    bq.a1 = 2.0 * (w * w - 1.0) / a0;
    bq.a2 = (w * w - w / q + 1.0) / a0;
    cascade.push_back(bq);
  }
  return cascade;
}

Eigen::RowVectorXd filter(const std::vector<Biquad>& cascade, const Eigen::RowVectorXd& x) {
  Eigen::RowVectorXd y = x;
  for (const Biquad& bq : cascade) {
    double z1 = 0.0, z2 = 0.0;  // direct form II transposed
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      const double in = y(k);
      const double out = bq.b0 * in + z1;
      z1 = bq.b1 * in - bq.a1 * out + z2;
      z2 = bq.b2 * in - bq.a2 * out;
      y(k) = out;
    }
  }
  return y;
}

Eigen::MatrixXd bandpass(const Eigen::MatrixXd& y, double fs_hz, double lo_hz, double hi_hz,
                         int order) {
  if (!(0.0 <= lo_hz && lo_hz < hi_hz && hi_hz < 0.5 * fs_hz))
    throw std::invalid_argument("bandpass: need 0 <= lo < hi < Nyquist");
  std::vector<Biquad> cascade;
  if (lo_hz > 0.0)
    for (const Biquad& bq : butterworth_highpass(lo_hz, fs_hz, order)) cascade.push_back(bq);
  for (const Biquad& bq : butterworth_lowpass(hi_hz, fs_hz, order)) cascade.push_back(bq);

  const Eigen::Index n = y.cols();
  const Eigen::Index pad = std::min<Eigen::Index>(n - 1, 12 * order);
  Eigen::MatrixXd out(y.rows(), n);
  for (Eigen::Index ch = 0; ch < y.rows(); ++ch) {
    // Odd-reflection padding at both ends, then forward-backward filtering.
    Eigen::RowVectorXd ext(n + 2 * pad);
    ext.segment(pad, n) = y.row(ch);
    for (Eigen::Index k = 0; k < pad; ++k) {
      ext(pad - 1 - k) = 2.0 * y(ch, 0) - y(ch, k + 1);
      ext(pad + n + k) = 2.0 * y(ch, n - 1) - y(ch, n - 2 - k);
    }
    Eigen::RowVectorXd f = filter(cascade, ext);
    f.reverseInPlace();
    f = filter(cascade, f);
    f.reverseInPlace();
    out.row(ch) = f.segment(pad, n);
  }
  return out;
}

}  // namespace physid::dsp
