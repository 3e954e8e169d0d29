#include "physid/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

namespace physid::linalg {

namespace {

// One eigen-direction before clustering: a real eigenvector column or a
// complex pair represented by the (alpha, beta) columns of its omega > 0
// member.
struct EigenUnit {
  bool is_pair = false;
  double sigma = 0.0;
  double omega = 0.0;
  Eigen::VectorXd col_a;  // real eigenvector, or alpha
  Eigen::VectorXd col_b;  // beta (pairs only)
  Eigen::Index original = 0;
};

void normalize_unit(EigenUnit& u) {
  double nrm = u.is_pair ? std::sqrt(u.col_a.squaredNorm() + u.col_b.squaredNorm())
                         : u.col_a.norm();
  if (nrm <= 0.0) return;
  u.col_a /= nrm;
  if (u.is_pair) u.col_b /= nrm;
  // Sign convention: first entry of alpha above the noise floor is positive.
  for (Eigen::Index k = 0; k < u.col_a.size(); ++k) {
    if (std::abs(u.col_a[k]) > 1e-12) {
      if (u.col_a[k] < 0.0) {
        u.col_a = -u.col_a;
        if (u.is_pair) u.col_b = -u.col_b;
      }
      break;
    }
  }
}

}  // namespace

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::VectorXd vec(const Eigen::MatrixXd& a) {
  return Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
}

Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw std::invalid_argument("unvec: size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& a, double tol) {
  if (a.size() == 0) return Eigen::MatrixXd(a.cols(), a.rows());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? tol * s(0) : 0.0;
  Eigen::VectorXd sinv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > cutoff && s(k) > 0.0) sinv(k) = 1.0 / s(k);
  return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
}

LeastSquaresSolution solve_lsq(const Eigen::MatrixXd& v, const Eigen::VectorXd& w,
                               double tol) {
  if (v.rows() != w.size()) throw std::invalid_argument("solve_lsq: row count != rhs length");
  LeastSquaresSolution sol;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  const double cutoff = tol * smax;
  double smin_kept = 0.0;
  Eigen::VectorXd sinv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) > cutoff && s(k) > 0.0) {
      sinv(k) = 1.0 / s(k);
      ++sol.rank;
      smin_kept = s(k);  // singular values are nonincreasing
    }
  }
  sol.x = svd.matrixV() * (sinv.asDiagonal() * (svd.matrixU().transpose() * w));
  sol.residual = (v * sol.x - w).norm();
  sol.condition = (sol.rank > 0 && smin_kept > 0.0) ? smax / smin_kept : 0.0;
  sol.full_column_rank = sol.rank == v.cols();
  return sol;
}

double condition_number(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  const Eigen::VectorXd& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

JordanDecomposition real_jordan(const Eigen::MatrixXd& a, double tol, double cond_cap) {
  if (a.rows() != a.cols()) throw std::invalid_argument("real_jordan: matrix not square");
  const Eigen::Index n = a.rows();
  JordanDecomposition jd;
  if (n == 0) {
    jd.T.resize(0, 0);
    jd.J.resize(0, 0);
    return jd;
  }

  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw DefectiveMatrixError("real_jordan: eigenvalue iteration failed");
  const Eigen::VectorXcd lam = es.eigenvalues();
  const Eigen::MatrixXcd vecs = es.eigenvectors();

  const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  const double imag_tol = tol * scale;

  // Collect real eigenvectors and complex pairs.
  std::vector<EigenUnit> units;
  std::vector<bool> used(static_cast<size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (used[static_cast<size_t>(i)]) continue;
    used[static_cast<size_t>(i)] = true;
    EigenUnit u;
    u.original = i;
    if (std::abs(lam(i).imag()) <= imag_tol) {
      // Rotate away any residual complex phase before taking the real part.
      Eigen::VectorXcd v = vecs.col(i);
      Eigen::Index kmax = 0;
      v.cwiseAbs().maxCoeff(&kmax);
      const std::complex<double> phase =
          std::abs(v(kmax)) > 0.0 ? v(kmax) / std::abs(v(kmax)) : std::complex<double>(1.0, 0.0);
      u.is_pair = false;
      u.sigma = lam(i).real();
      u.col_a = (v / phase).real();
    } else {
      // Find the unused conjugate partner.
      Eigen::Index partner = -1;
      double best = std::numeric_limits<double>::max();
      for (Eigen::Index k = i + 1; k < n; ++k) {
        if (used[static_cast<size_t>(k)]) continue;
        const double d = std::abs(lam(k) - std::conj(lam(i)));
        if (d < best) {
          best = d;
          partner = k;
        }
      }
      if (partner < 0 || best > 1e-6 * scale)
        throw DefectiveMatrixError("real_jordan: unmatched complex eigenvalue");
      used[static_cast<size_t>(partner)] = true;
      const Eigen::Index rep = lam(i).imag() > 0.0 ? i : partner;
      u.is_pair = true;
      u.sigma = lam(rep).real();
      u.omega = std::abs(lam(rep).imag());
      u.col_a = vecs.col(rep).real();
      u.col_b = vecs.col(rep).imag();
    }
    normalize_unit(u);
    units.push_back(std::move(u));
  }

  // Cluster equal eigenvalues (same kind, distance below tol * scale).
  const double ctol = tol * std::max(scale, 1.0);
  std::vector<std::vector<size_t>> clusters;
  std::vector<bool> clustered(units.size(), false);
  for (size_t i = 0; i < units.size(); ++i) {
    if (clustered[i]) continue;
    std::vector<size_t> c{i};
    clustered[i] = true;
    for (size_t k = i + 1; k < units.size(); ++k) {
      if (clustered[k] || units[k].is_pair != units[i].is_pair) continue;
      const double d = std::hypot(units[k].sigma - units[i].sigma,
                                  units[k].omega - units[i].omega);
      if (d <= ctol) {
        c.push_back(k);
        clustered[k] = true;
      }
    }
    clusters.push_back(std::move(c));
  }

  // Canonical block order: omega ascending, sigma descending, original index.
  struct ClusterKey {
    double omega, sigma;
    Eigen::Index original;
    size_t idx;
  };
  std::vector<ClusterKey> keys;
  for (size_t c = 0; c < clusters.size(); ++c) {
    double so = 0.0, ss = 0.0;
    for (size_t m : clusters[c]) {
      so += units[m].omega;
      ss += units[m].sigma;
    }
    const double cnt = static_cast<double>(clusters[c].size());
    keys.push_back({so / cnt, ss / cnt, units[clusters[c].front()].original, c});
  }
  std::sort(keys.begin(), keys.end(), [](const ClusterKey& a, const ClusterKey& b) {
    if (a.omega != b.omega) return a.omega < b.omega;
    if (a.sigma != b.sigma) return a.sigma > b.sigma;
    return a.original < b.original;
  });

  jd.T = Eigen::MatrixXd::Zero(n, n);
  jd.J = Eigen::MatrixXd::Zero(n, n);
  Eigen::Index col = 0;
  for (const ClusterKey& key : keys) {
    const std::vector<size_t>& c = clusters[key.idx];
    JordanBlock blk;
    blk.kind = units[c.front()].is_pair ? JordanBlock::Kind::complex_pair
                                        : JordanBlock::Kind::real;
    blk.sigma = key.sigma;
    blk.omega = key.omega;
    blk.multiplicity = static_cast<int>(c.size());
    blk.span_begin = col;
    for (size_t m : c) {
      const EigenUnit& u = units[m];
      if (u.is_pair) {
        jd.T.col(col) = u.col_a;
        jd.T.col(col + 1) = u.col_b;
        jd.J(col, col) = key.sigma;
        jd.J(col, col + 1) = key.omega;
        jd.J(col + 1, col) = -key.omega;
        jd.J(col + 1, col + 1) = key.sigma;
        col += 2;
      } else {
        jd.T.col(col) = u.col_a;
        jd.J(col, col) = key.sigma;
        col += 1;
      }
    }
    blk.span_len = col - blk.span_begin;
    jd.blocks.push_back(blk);
  }

  const double cond = condition_number(jd.T);
  if (!(cond < cond_cap)) {
    std::ostringstream os;
    os << "real_jordan: eigenvector matrix condition " << cond
       << " exceeds cap " << cond_cap << " (matrix is numerically defective)";
    throw DefectiveMatrixError(os.str());
  }
  return jd;
}

Eigen::MatrixXd jordan_matrix(const std::vector<JordanBlock>& blocks) {
  Eigen::Index n = 0;
  for (const JordanBlock& b : blocks) n += b.span_len;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (const JordanBlock& b : blocks) {
    Eigen::Index at = b.span_begin;
    for (int m = 0; m < b.multiplicity; ++m) {
      if (b.kind == JordanBlock::Kind::complex_pair) {
        j(at, at) = b.sigma;
        j(at, at + 1) = b.omega;
        j(at + 1, at) = -b.omega;
        j(at + 1, at + 1) = b.sigma;
        at += 2;
      } else {
        j(at, at) = b.sigma;
        at += 1;
      }
    }
  }
  return j;
}

InitialStateFit fit_initial_state(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                                  const Eigen::MatrixXd& y, Eigen::Index max_samples,
                                  double tol) {
  if (a.rows() != a.cols() || c.cols() != a.rows() || y.rows() != c.rows())
    throw std::invalid_argument("fit_initial_state: shape mismatch");
  const Eigen::Index n_fit =
      max_samples > 0 ? std::min(max_samples, y.cols()) : y.cols();
  const Eigen::Index p = a.rows();
  Eigen::MatrixXd obs = c;  // C A^k, updated in place
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
  for (Eigen::Index k = 0; k < n_fit; ++k) {
    gram.noalias() += obs.transpose() * obs;
    rhs.noalias() += obs.transpose() * y.col(k);
    obs = obs * a;
  }
  InitialStateFit fit;
  LeastSquaresSolution sol = solve_lsq(gram, rhs, tol);
  fit.x0 = sol.x;
  fit.rank = sol.rank;
  double ss = 0.0;
  Eigen::VectorXd x = fit.x0;
  for (Eigen::Index k = 0; k < n_fit; ++k) {
    ss += (y.col(k) - c * x).squaredNorm();
    x = a * x;
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(n_fit * y.rows()));
  return fit;
}

Eigen::MatrixXd principal_log(const Eigen::MatrixXd& a, double unit_tol) {
  JordanDecomposition jd = real_jordan(a);
  Eigen::MatrixXd logj = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (const JordanBlock& b : jd.blocks) {
    Eigen::Index at = b.span_begin;
    for (int m = 0; m < b.multiplicity; ++m) {
      if (b.kind == JordanBlock::Kind::complex_pair) {
        const double r = std::hypot(b.sigma, b.omega);
        const double theta = std::atan2(b.omega, b.sigma);
        logj(at, at) = std::log(r);
        logj(at, at + 1) = theta;
        logj(at + 1, at) = -theta;
        logj(at + 1, at + 1) = std::log(r);
        at += 2;
      } else {
        if (std::abs(b.sigma - 1.0) <= unit_tol) {
          // DC carve-out: eigenvalue 1 maps to exactly 0.
          at += 1;
          continue;
        }
        if (b.sigma <= 0.0) {
          std::ostringstream os;
          os << "principal_log: eigenvalue " << b.sigma
             << " lies on the closed negative real axis";
          throw LogDomainError(os.str());
        }
        logj(at, at) = std::log(b.sigma);
        at += 1;
      }
    }
  }
  const Eigen::MatrixXd y = jd.T * logj;
  return jd.T.transpose().partialPivLu().solve(y.transpose()).transpose();
}

}  // namespace physid::linalg
