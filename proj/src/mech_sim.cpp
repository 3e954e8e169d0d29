#include "physid/mech_sim.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace physid::mech {

namespace {

constexpr double kTwoPi = 2.0 * EIGEN_PI;

Eigen::MatrixXd tridiagonal_chain(const Eigen::VectorXd& coeff, Eigen::Index n) {
  // coeff holds n+1 link values; row i couples links i and i+1.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = coeff(i) + coeff(i + 1);
    if (i + 1 < n) {
      m(i, i + 1) = -coeff(i + 1);
      m(i + 1, i) = -coeff(i + 1);
    }
  }
  return m;
}

}  // namespace

Eigen::MatrixXd MechanicalSystem::k_norm() const {
  return M.ldlt().solve(K);
}
Eigen::MatrixXd MechanicalSystem::d_norm() const {
  return M.ldlt().solve(D);
}
Eigen::MatrixXd MechanicalSystem::b_norm() const {
  return M.ldlt().solve(B_influence);
}

SensorConfig SensorConfig::acceleration(Eigen::Index n) {
  SensorConfig s;
  s.C_p = Eigen::MatrixXd::Zero(n, n);
  s.C_v = Eigen::MatrixXd::Zero(n, n);
  s.C_ac = Eigen::MatrixXd::Identity(n, n);
  return s;
}

MechanicalSystem build_chain(const ChainSpec& spec) {
  const Eigen::Index n = spec.dof();
  if (n < 1) throw std::invalid_argument("build_chain: empty chain");
  if ((spec.masses.array() <= 0.0).any())
    throw std::invalid_argument("build_chain: masses must be positive");

  Eigen::VectorXd k = spec.stiffnesses;
  if (k.size() == n) {
    k.conservativeResize(n + 1);
    k(n) = 0.0;
  }
  if (k.size() != n + 1) throw std::invalid_argument("build_chain: need n or n+1 stiffnesses");
  if ((k.array() < 0.0).any()) throw std::invalid_argument("build_chain: negative stiffness");
  if (!spec.include_last_anchor) k(n) = 0.0;

  MechanicalSystem sys;
  sys.M = spec.masses.asDiagonal();
  sys.K = tridiagonal_chain(k, n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (sys.K.row(i).cwiseAbs().maxCoeff() <= 0.0)
      throw std::invalid_argument("build_chain: stiffness row is identically zero");

  if (spec.rayleigh) {
    sys.D = spec.rayleigh_epsilon * sys.M + spec.rayleigh_nu * sys.K;
  } else {
    Eigen::VectorXd d = spec.dampers;
    if (d.size() == 0) d = Eigen::VectorXd::Zero(n + 1);
    if (d.size() == n) {
      d.conservativeResize(n + 1);
      d(n) = 0.0;
    }
    if (d.size() != n + 1) throw std::invalid_argument("build_chain: need n or n+1 dampers");
    if (!spec.include_last_anchor) d(n) = 0.0;
    sys.D = tridiagonal_chain(d, n);
  }

  if (spec.input_influence.size() > 0) {
    if (spec.input_influence.rows() != n)
      throw std::invalid_argument("build_chain: input influence rows != DOF");
    sys.B_influence = spec.input_influence;
  } else {
    sys.B_influence = Eigen::MatrixXd::Zero(n, 1);
    sys.B_influence(0, 0) = 1.0;
  }
  return sys;
}

PlantStateSpace to_state_space(const MechanicalSystem& sys, const SensorConfig& sensors) {
  const Eigen::Index n = sys.dof();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.M);
  if (!lu.isInvertible()) throw std::invalid_argument("to_state_space: singular mass matrix");
  const Eigen::MatrixXd kn = lu.solve(sys.K);
  const Eigen::MatrixXd dn = lu.solve(sys.D);
  const Eigen::MatrixXd bn = lu.solve(sys.B_influence);

  PlantStateSpace p;
  p.A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  p.A.topRightCorner(n, n).setIdentity();
  p.A.bottomLeftCorner(n, n) = -kn;
  p.A.bottomRightCorner(n, n) = -dn;
  p.B = Eigen::MatrixXd::Zero(2 * n, bn.cols());
  p.B.bottomRows(n) = bn;
  p.C.resize(sensors.outputs(), 2 * n);
  p.C.leftCols(n) = sensors.C_p - sensors.C_ac * kn;
  p.C.rightCols(n) = sensors.C_v - sensors.C_ac * dn;
  p.D = sensors.C_ac * bn;
  return p;
}

Eigen::MatrixXd discretize_autonomous(const Eigen::MatrixXd& a, double t_s) {
  return (a * t_s).exp();
}

PlantStateSpace discretize(const PlantStateSpace& plant, double t_s) {
  if (t_s <= 0.0) throw std::invalid_argument("discretize: T_s must be positive");
  if (plant.domain == signal::Domain::discrete)
    throw std::invalid_argument("discretize: plant already discrete");
  const Eigen::Index n = plant.A.rows();
  const Eigen::Index r = plant.B.cols();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + r, n + r);
  aug.topLeftCorner(n, n) = plant.A;
  aug.topRightCorner(n, r) = plant.B;
  const Eigen::MatrixXd e = (aug * t_s).exp();
  PlantStateSpace d = plant;
  d.A = e.topLeftCorner(n, n);
  d.B = e.topRightCorner(n, r);
  d.domain = signal::Domain::discrete;
  d.T_s = t_s;
  return d;
}

AugmentedModel augment(const PlantStateSpace& plant, const signal::MimoSignalModel& sig) {
  if (plant.B.cols() != sig.C_u.rows())
    throw std::invalid_argument("augment: input count != signal channel count");
  const bool plant_discrete = plant.domain == signal::Domain::discrete;
  if (plant_discrete != (sig.domain == signal::Domain::discrete))
    throw std::invalid_argument("augment: plant and signal model domains differ");
  const Eigen::Index np = plant.A.rows();
  const Eigen::Index nu = sig.n_u;
  AugmentedModel a;
  a.plant_dim = np;
  a.signal_dim = nu;
  a.domain = plant.domain;
  a.T_s = plant.T_s;
  a.A = Eigen::MatrixXd::Zero(np + nu, np + nu);
  a.A.topLeftCorner(np, np) = plant.A;
  a.A.topRightCorner(np, nu) = plant.B * sig.C_u;
  a.A.bottomRightCorner(nu, nu) = sig.A_u;
  a.C.resize(plant.C.rows(), np + nu);
  a.C.leftCols(np) = plant.C;
  a.C.rightCols(nu) = plant.D * sig.C_u;
  a.K_a = Eigen::MatrixXd::Zero(np + nu, plant.B.cols());
  a.K_a.topRows(np) = plant.B;
  a.V_a = plant.D;
  return a;
}

namespace {

void add_measurement_noise(Eigen::MatrixXd& y, const SensorConfig& sensors,
                           std::uint64_t seed) {
  if (!sensors.noise_snr_db) return;
  const double snr = *sensors.noise_snr_db;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index ch = 0; ch < y.rows(); ++ch) {
    const double mean = y.row(ch).mean();
    const double var =
        (y.row(ch).array() - mean).square().sum() / static_cast<double>(y.cols());
    const double sigma = std::sqrt(var / std::pow(10.0, snr / 10.0));
    for (Eigen::Index k = 0; k < y.cols(); ++k) y(ch, k) += sigma * gauss(rng);
  }
}

}  // namespace

SimRecord simulate(const PlantStateSpace& plant_d, const Eigen::MatrixXd& u,
                   const SensorConfig& sensors, std::uint64_t seed,
                   const Eigen::MatrixXd& b_influence, const Eigen::VectorXd& x0) {
  if (plant_d.domain != signal::Domain::discrete)
    throw std::invalid_argument("simulate: discretize the plant first");
  if (u.rows() != plant_d.B.cols()) throw std::invalid_argument("simulate: input channel mismatch");
  if (!u.allFinite()) throw std::invalid_argument("simulate: non-finite input");
  const Eigen::Index nx = plant_d.A.rows();
  const Eigen::Index nk = u.cols();

  SimRecord rec;
  rec.T_s = plant_d.T_s;
  rec.t = Eigen::VectorXd::LinSpaced(nk, 0.0, plant_d.T_s * static_cast<double>(nk - 1));
  rec.u = u;
  rec.x.resize(nx, nk);
  rec.y.resize(plant_d.C.rows(), nk);

  Eigen::VectorXd x = x0.size() > 0 ? x0 : Eigen::VectorXd::Zero(nx);
  for (Eigen::Index k = 0; k < nk; ++k) {
    rec.x.col(k) = x;
    rec.y.col(k) = plant_d.C * x + plant_d.D * u.col(k);
    x = plant_d.A * x + plant_d.B * u.col(k);
  }
  if (b_influence.size() > 0) rec.fe = b_influence * u;
  add_measurement_noise(rec.y, sensors, seed);
  return rec;
}

Eigen::RowVectorXd multisine(const MultisineSpec& spec, Eigen::Index n_samples, double t_s) {
  if (spec.freqs_hz.size() != spec.amps.size() || spec.amps.size() != spec.phases.size())
    throw std::invalid_argument("multisine: freqs/amps/phases lengths differ");
  for (double f : spec.freqs_hz)
    if (f >= 0.5 / t_s) throw std::invalid_argument("multisine: frequency above Nyquist");
  Eigen::RowVectorXd u = Eigen::RowVectorXd::Constant(n_samples, spec.offset);
  for (size_t i = 0; i < spec.freqs_hz.size(); ++i) {
    const double w = kTwoPi * spec.freqs_hz[i];
    for (Eigen::Index k = 0; k < n_samples; ++k)
      u(k) += spec.amps[i] * std::sin(w * static_cast<double>(k) * t_s + spec.phases[i]);
  }
  return u;
}

signal::PeriodicSignalModel multisine_ct_model(const MultisineSpec& spec, bool force_offset) {
  const bool offset = force_offset || spec.offset != 0.0;
  return signal::build_ct_lines(spec.freqs_hz, offset);
}

Eigen::VectorXd multisine_initial_state(const MultisineSpec& spec) {
  const bool offset = spec.offset != 0.0;
  Eigen::VectorXd x0((offset ? 1 : 0) + 2 * static_cast<Eigen::Index>(spec.freqs_hz.size()));
  Eigen::Index at = 0;
  if (offset) x0(at++) = spec.offset;
  for (size_t i = 0; i < spec.freqs_hz.size(); ++i) {
    // Oscillator state (a sin(phi), a cos(phi)) reproduces a sin(w t + phi).
    x0(at++) = spec.amps[i] * std::sin(spec.phases[i]);
    x0(at++) = spec.amps[i] * std::cos(spec.phases[i]);
  }
  return x0;
}

SimRecord generate_periodic_dataset(const MechanicalSystem& sys, const SensorConfig& sensors,
                                    const std::vector<MultisineSpec>& inputs,
                                    Eigen::Index n_samples, double t_s, std::uint64_t seed) {
  if (inputs.empty()) throw std::invalid_argument("generate_periodic_dataset: no inputs");
  const PlantStateSpace plant = to_state_space(sys, sensors);
  if (static_cast<Eigen::Index>(inputs.size()) != plant.B.cols())
    throw std::invalid_argument("generate_periodic_dataset: input spec count != channels");

  std::vector<signal::PeriodicSignalModel> chans;
  Eigen::VectorXd xu0;
  for (const MultisineSpec& spec : inputs) {
    for (double f : spec.freqs_hz)
      if (f >= 0.5 / t_s) throw std::invalid_argument("generate_periodic_dataset: line above Nyquist");
    chans.push_back(multisine_ct_model(spec));
    const Eigen::VectorXd x0c = multisine_initial_state(spec);
    const Eigen::Index old = xu0.size();
    xu0.conservativeResize(old + x0c.size());
    xu0.tail(x0c.size()) = x0c;
  }
  const signal::MimoSignalModel sig = stack_mimo(chans);
  const AugmentedModel aug = augment(plant, sig);
  const Eigen::MatrixXd a_d = discretize_autonomous(aug.A, t_s);

  const Eigen::Index np = aug.plant_dim;
  const Eigen::Index nu = aug.signal_dim;
  SimRecord rec;
  rec.T_s = t_s;
  rec.t = Eigen::VectorXd::LinSpaced(n_samples, 0.0, t_s * static_cast<double>(n_samples - 1));
  rec.u.resize(sig.C_u.rows(), n_samples);
  rec.y.resize(aug.C.rows(), n_samples);
  rec.x.resize(np, n_samples);

  Eigen::VectorXd xa = Eigen::VectorXd::Zero(np + nu);
  xa.tail(nu) = xu0;
  for (Eigen::Index k = 0; k < n_samples; ++k) {
    rec.x.col(k) = xa.head(np);
    rec.u.col(k) = sig.C_u * xa.tail(nu);
    rec.y.col(k) = aug.C * xa;
    xa = a_d * xa;
  }
  rec.fe = sys.B_influence * rec.u;
  add_measurement_noise(rec.y, sensors, seed);
  return rec;
}

MultisineSpec random_band_limited_spec(double lo_hz, double hi_hz, Eigen::Index n_samples,
                                       double t_s, double rms, std::uint64_t seed) {
  if (!(0.0 <= lo_hz && lo_hz < hi_hz && hi_hz < 0.5 / t_s))
    throw std::invalid_argument("random_band_limited_spec: invalid band");
  const double fundamental = 1.0 / (static_cast<double>(n_samples) * t_s);
  const int k_lo = std::max(1, static_cast<int>(std::ceil(lo_hz / fundamental)));
  const int k_hi = static_cast<int>(std::floor(hi_hz / fundamental));
  if (k_hi < k_lo) throw std::invalid_argument("random_band_limited_spec: band holds no harmonics");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  MultisineSpec spec;
  double power = 0.0;
  for (int k = k_lo; k <= k_hi; ++k) {
    const double a = amp(rng);
    spec.freqs_hz.push_back(k * fundamental);
    spec.amps.push_back(a);
    spec.phases.push_back(phase(rng));
    power += 0.5 * a * a;
  }
  const double scale = rms / std::sqrt(power);
  for (double& a : spec.amps) a *= scale;
  return spec;
}

}  // namespace physid::mech
