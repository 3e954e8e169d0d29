#include "physid/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace physid::signal {

namespace {

constexpr double kTwoPi = 2.0 * EIGEN_PI;

PeriodicSignalModel assemble_lines(Domain domain, const std::vector<double>& lines_hz,
                                   bool include_offset, double t_s) {
  const Eigen::Index dim =
      (include_offset ? 1 : 0) + 2 * static_cast<Eigen::Index>(lines_hz.size());
  if (dim == 0) throw std::invalid_argument("signal model needs an offset or at least one line");
  PeriodicSignalModel m;
  m.domain = domain;
  m.T_s = t_s;
  m.include_offset = include_offset;
  m.line_freqs_hz = lines_hz;
  m.A_u = Eigen::MatrixXd::Zero(dim, dim);
  m.C_u = Eigen::MatrixXd::Zero(1, dim);
  Eigen::Index at = 0;
  if (include_offset) {
    m.A_u(0, 0) = domain == Domain::continuous ? 0.0 : 1.0;
    m.C_u(0, 0) = 1.0;
    at = 1;
  }
  for (double f : lines_hz) {
    if (f <= 0.0) throw std::invalid_argument("line frequency must be positive");
    if (domain == Domain::continuous) {
      const double w = kTwoPi * f;
      m.A_u(at, at + 1) = w;
      m.A_u(at + 1, at) = -w;
    } else {
      const double th = kTwoPi * f * t_s;
      m.A_u(at, at + 1) = -1.0;
      m.A_u(at + 1, at) = 1.0;
      m.A_u(at + 1, at + 1) = 2.0 * std::cos(th);
    }
    m.C_u(0, at) = 1.0;
    at += 2;
  }
  return m;
}

}  // namespace

PeriodicSignalModel build_ct_periodic(double f_T_hz, int n_a, bool include_offset) {
  if (f_T_hz <= 0.0 && n_a > 1) throw std::invalid_argument("fundamental frequency must be positive");
  if (n_a < 1) throw std::invalid_argument("n_a must be >= 1");
  std::vector<double> lines;
  for (int i = 1; i < n_a; ++i) lines.push_back(i * f_T_hz);
  PeriodicSignalModel m = assemble_lines(Domain::continuous, lines, include_offset, 0.0);
  m.f_T = f_T_hz;
  m.n_a = n_a;
  return m;
}

PeriodicSignalModel build_dt_periodic(double f_T_hz, int n_a, double t_s,
                                      bool include_offset) {
  if (n_a < 1) throw std::invalid_argument("n_a must be >= 1");
  if (t_s <= 0.0) throw std::invalid_argument("sampling time must be positive");
  if (f_T_hz <= 0.0 && n_a > 1) throw std::invalid_argument("fundamental frequency must be positive");
  const double nyquist = 0.5 / t_s;
  if ((n_a - 1) * f_T_hz >= nyquist)
    throw std::invalid_argument("harmonic above Nyquist: aliased oscillator blocks are ambiguous");
  std::vector<double> lines;
  for (int i = 1; i < n_a; ++i) lines.push_back(i * f_T_hz);
  PeriodicSignalModel m = assemble_lines(Domain::discrete, lines, include_offset, t_s);
  m.f_T = f_T_hz;
  m.n_a = n_a;
  return m;
}

PeriodicSignalModel build_ct_lines(const std::vector<double>& line_freqs_hz,
                                   bool include_offset) {
  PeriodicSignalModel m =
      assemble_lines(Domain::continuous, line_freqs_hz, include_offset, 0.0);
  m.n_a = static_cast<int>(line_freqs_hz.size()) + 1;
  return m;
}

FiniteLengthModel build_finite_length(Eigen::Index n_samples, double t_s, int n_a) {
  if (n_samples < 2) throw std::invalid_argument("finite-length model needs N >= 2");
  if (t_s <= 0.0) throw std::invalid_argument("sampling time must be positive");
  if (n_a < 1 || 2 * static_cast<Eigen::Index>(n_a) > n_samples)
    throw std::invalid_argument("n_a must satisfy 1 <= n_a <= N/2");
  FiniteLengthModel m;
  m.N = n_samples;
  m.T_s = t_s;
  m.n_a = n_a;
  const Eigen::Index dim = 2 * n_a - 1;
  m.A_v = Eigen::MatrixXd::Zero(dim, dim);
  m.C_v = Eigen::MatrixXd::Zero(1, dim);
  m.A_v(0, 0) = 1.0;
  m.C_v(0, 0) = 1.0;
  for (int i = 1; i < n_a; ++i) {
    const double th = i * kTwoPi / static_cast<double>(n_samples);
    const Eigen::Index at = 1 + 2 * (i - 1);
    m.A_v(at, at) = std::cos(th);
    m.A_v(at, at + 1) = std::sin(th);
    m.A_v(at + 1, at) = -std::sin(th);
    m.A_v(at + 1, at + 1) = std::cos(th);
    m.C_v(0, at) = 1.0;
  }
  return m;
}

MimoSignalModel stack_mimo(const std::vector<PeriodicSignalModel>& channels) {
  if (channels.empty()) throw std::invalid_argument("stack_mimo: no channels");
  MimoSignalModel mm;
  mm.domain = channels.front().domain;
  mm.T_s = channels.front().T_s;
  Eigen::Index n_u = 0;
  for (const PeriodicSignalModel& c : channels) {
    if (c.domain != mm.domain) throw std::invalid_argument("stack_mimo: mixed domains");
    if (c.domain == Domain::discrete && c.T_s != mm.T_s)
      throw std::invalid_argument("stack_mimo: mixed sampling times");
    n_u += c.dim();
  }
  const Eigen::Index r = static_cast<Eigen::Index>(channels.size());
  mm.channels = channels;
  mm.n_u = n_u;
  mm.A_u = Eigen::MatrixXd::Zero(n_u, n_u);
  mm.C_u = Eigen::MatrixXd::Zero(r, n_u);
  Eigen::Index at = 0;
  for (Eigen::Index ch = 0; ch < r; ++ch) {
    const Eigen::Index d = channels[static_cast<size_t>(ch)].dim();
    mm.A_u.block(at, at, d, d) = channels[static_cast<size_t>(ch)].A_u;
    mm.C_u.block(ch, at, 1, d) = channels[static_cast<size_t>(ch)].C_u;
    at += d;
  }
  return mm;
}

Eigen::MatrixXd simulate_autonomous(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                                    const Eigen::VectorXd& x0, Eigen::Index n) {
  if (a.rows() != a.cols() || c.cols() != a.rows() || x0.size() != a.rows())
    throw std::invalid_argument("simulate_autonomous: shape mismatch");
  Eigen::MatrixXd y(c.rows(), n);
  Eigen::VectorXd x = x0;
  for (Eigen::Index k = 0; k < n; ++k) {
    y.col(k) = c * x;
    x = a * x;
  }
  return y;
}

double bin_power(const Eigen::MatrixXd& y, Eigen::Index bin) {
  // Goertzel recurrence per channel; powers add across channels.
  const Eigen::Index n = y.cols();
  const double w = kTwoPi * static_cast<double>(bin) / static_cast<double>(n);
  const double coeff = 2.0 * std::cos(w);
  double total = 0.0;
  for (Eigen::Index ch = 0; ch < y.rows(); ++ch) {
    double s1 = 0.0, s2 = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double s0 = y(ch, k) + coeff * s1 - s2;
      s2 = s1;
      s1 = s0;
    }
    const double re = s1 - s2 * std::cos(w);
    const double im = s2 * std::sin(w);
    total += (re * re + im * im);
  }
  return total / (static_cast<double>(n) * static_cast<double>(n));
}

HarmonicDetection detect_harmonics(const Eigen::MatrixXd& y, double t_s,
                                   const HarmonicDetectionOptions& opts) {
  const Eigen::Index n = y.cols();
  if (n < 4) throw std::invalid_argument("detect_harmonics: record too short");
  HarmonicDetection det;
  det.fundamental_hz = 1.0 / (static_cast<double>(n) * t_s);
  const double nyquist = 0.5 / t_s;
  const double hi = opts.hi_hz > 0.0 ? std::min(opts.hi_hz, nyquist) : nyquist;
  int k_lo = std::max(1, static_cast<int>(std::ceil(opts.lo_hz / det.fundamental_hz - 1e-9)));
  int k_hi = static_cast<int>(std::floor(hi / det.fundamental_hz + 1e-9));
  k_hi = std::min<int>(k_hi, static_cast<int>(n / 2));
  if (k_hi < k_lo) throw std::invalid_argument("detect_harmonics: empty scan band");

  det.first_bin = k_lo;
  det.bin_power.resize(k_hi - k_lo + 1);
  double band_energy = 0.0;
  for (int k = k_lo; k <= k_hi; ++k) {
    const double p = bin_power(y, k);
    det.bin_power(k - k_lo) = p;
    band_energy += p;
  }
  if (band_energy <= 0.0) return det;

  const double dc = bin_power(y, 0);
  det.dc = dc > opts.energy_fraction * band_energy;

  std::vector<std::pair<double, int>> kept;
  for (int k = k_lo; k <= k_hi; ++k) {
    const double p = det.bin_power(k - k_lo);
    if (p > opts.energy_fraction * band_energy) kept.push_back({p, k});
  }
  if (opts.max_harmonics > 0 && static_cast<int>(kept.size()) > opts.max_harmonics) {
    std::sort(kept.begin(), kept.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    kept.resize(static_cast<size_t>(opts.max_harmonics));
  }
  std::sort(kept.begin(), kept.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  for (const auto& [p, k] : kept) {
    det.harmonics.push_back(k);
    det.freqs_hz.push_back(k * det.fundamental_hz);
  }
  return det;
}

}  // namespace physid::signal
