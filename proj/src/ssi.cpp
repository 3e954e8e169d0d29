#include "physid/ssi.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "physid/kernels.hpp"
#include "physid/linalg.hpp"

namespace physid::ssi {

namespace {

Eigen::MatrixXd hankel_rows(const Eigen::MatrixXd& y, Eigen::Index first_block,
                            Eigen::Index block_rows, Eigen::Index j) {
  const Eigen::Index m = y.rows();
  Eigen::MatrixXd h(m * block_rows, j);
  for (Eigen::Index b = 0; b < block_rows; ++b)
    h.middleRows(b * m, m) = y.middleCols(first_block + b, j);
  return h;
}

}  // namespace

HankelPartition block_hankel(const Eigen::MatrixXd& y, int i, Eigen::Index j) {
  if (i < 1) throw std::invalid_argument("block_hankel: need i >= 1");
  const Eigen::Index n = y.cols();
  if (j <= 0) j = n - 2 * static_cast<Eigen::Index>(i) + 1;
  if (n < 2 * static_cast<Eigen::Index>(i) + j - 1 || j < 1)
    throw std::invalid_argument("block_hankel: record too short for 2i + j - 1 samples");
  HankelPartition h;
  h.m = static_cast<int>(y.rows());
  h.i = i;
  h.j = j;
  h.H = hankel_rows(y, 0, 2 * i, j);
  return h;
}

PersistentExcitation pe_order(const Eigen::MatrixXd& u, int i, Eigen::Index from,
                              double rank_tol) {
  if (i < 1) throw std::invalid_argument("pe_order: need i >= 1");
  const Eigen::Index n_cols = u.cols() - from - i + 1;
  if (n_cols < 1) throw std::invalid_argument("pe_order: insufficient samples");
  const Eigen::MatrixXd h = hankel_rows(u, from, i, n_cols);
  const Eigen::MatrixXd g = kernels::gram(h) / static_cast<double>(n_cols);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  PersistentExcitation pe;
  pe.gram_eigenvalues = es.eigenvalues();
  const double lam_max = pe.gram_eigenvalues.maxCoeff();
  for (Eigen::Index k = 0; k < pe.gram_eigenvalues.size(); ++k)
    if (pe.gram_eigenvalues(k) > rank_tol * lam_max && pe.gram_eigenvalues(k) > 0.0)
      ++pe.rank;
  pe.satisfied = pe.rank == u.rows() * i;
  return pe;
}

Projection project(const HankelPartition& h, double rank_tol) {
  if (h.i < 2) throw std::invalid_argument("project: need i >= 2 block rows");
  const Eigen::Index mi = static_cast<Eigen::Index>(h.m) * h.i;
  const Eigen::Index rows = 2 * mi;
  if (h.j < rows)
    throw std::invalid_argument("project: need at least 2mi Hankel columns");

  Projection p;
  p.m = h.m;
  p.i = h.i;
  p.j = h.j;

  // LQ of the stacked data matrix via QR of its transpose. The 1/sqrt(j)
  // scaling makes L L^T the sample covariance of the Hankel rows.
  const Eigen::MatrixXd ht = h.H.transpose() / std::sqrt(static_cast<double>(h.j));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ht);
  Eigen::MatrixXd r = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
  p.L = r.transpose();

  const Eigen::MatrixXd l11 = p.L.topLeftCorner(mi, mi);
  const Eigen::MatrixXd lf1 = p.L.bottomLeftCorner(mi, mi);
  p.Tfp = lf1 * l11.transpose();

  const Eigen::MatrixXd phi = p.L * p.L.transpose();
  p.Lambda0 = Eigen::MatrixXd::Zero(h.m, h.m);
  for (int b = 0; b < 2 * h.i; ++b)
    p.Lambda0 += phi.block(static_cast<Eigen::Index>(b) * h.m,
                           static_cast<Eigen::Index>(b) * h.m, h.m, h.m);
  p.Lambda0 /= static_cast<double>(2 * h.i);

  {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(l11);
    const Eigen::VectorXd& s = svd.singularValues();
    const double smax = s(0);
    for (Eigen::Index k = 0; k < s.size(); ++k)
      if (s(k) > rank_tol * smax && s(k) > 0.0) ++p.past_rank;
    const double smin = s(s.size() - 1);
    p.past_condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  }

  p.core_oi = Eigen::MatrixXd::Zero(mi, rows);
  p.core_oim = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(h.m) * (h.i - 1), rows);
  if (p.past_rank == mi) {
    // Row space of Y_p is spanned by the first mi columns of Q.
    p.core_oi.leftCols(mi) = lf1;
    p.core_oim.leftCols(mi + h.m) =
        p.L.block(mi + h.m, 0, static_cast<Eigen::Index>(h.m) * (h.i - 1), mi + h.m);
  } else {
    // Deficient past block (noise-free records): normal-equations projection
    // through the pseudo-inverse, still expressed against the Q basis.
    p.pinv_fallback = true;
    const Eigen::MatrixXd ppp = l11 * l11.transpose();
    p.core_oi.leftCols(mi) = p.Tfp * linalg::pinv(ppp, rank_tol) * l11;
    const Eigen::Index rp = mi + h.m;  // rows of Y_p^+
    const Eigen::MatrixXd lpp = p.L.topLeftCorner(rp, rp);
    const Eigen::MatrixXd lfm = p.L.block(rp, 0, static_cast<Eigen::Index>(h.m) * (h.i - 1), rp);
    p.core_oim.leftCols(rp) =
        (lfm * lpp.transpose()) * linalg::pinv(lpp * lpp.transpose(), rank_tol) * lpp;
  }
  return p;
}

Eigen::MatrixXd materialize_oi(const HankelPartition& h, double rank_tol) {
  const Eigen::Index mi = static_cast<Eigen::Index>(h.m) * h.i;
  const Eigen::Index rows = 2 * mi;
  const double sj = std::sqrt(static_cast<double>(h.j));
  const Eigen::MatrixXd ht = h.H.transpose() / sj;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ht);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(h.j, rows);
  const Projection p = project(h, rank_tol);
  return sj * p.core_oi * q.transpose();
}

WeightedSvd weighted_svd(const Eigen::MatrixXd& o, const Eigen::MatrixXd& w1,
                         const Eigen::MatrixXd& w2, Eigen::Index order_hint) {
  Eigen::MatrixXd weighted = o;
  if (w1.size() > 0) weighted = w1 * weighted;
  if (w2.size() > 0) weighted = weighted * w2;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(weighted, Eigen::ComputeThinU | Eigen::ComputeThinV);
  WeightedSvd out;
  out.singular_values = svd.singularValues();
  const Eigen::VectorXd& s = out.singular_values;
  const double floor = s.size() > 0 ? 1e-14 * s(0) : 0.0;

  if (order_hint > 0) {
    out.order = std::min<Eigen::Index>(order_hint, s.size());
  } else {
    // Largest relative gap in the nonzero part of the spectrum.
    double best = 0.0;
    Eigen::Index cut = s.size();
    for (Eigen::Index k = 1; k < s.size(); ++k) {
      if (s(k - 1) <= floor) break;
      const double ratio = s(k) > 0.0 ? s(k - 1) / s(k) : std::numeric_limits<double>::infinity();
      if (ratio > best) {
        best = ratio;
        cut = k;
      }
    }
    out.order = cut;
  }

  out.U1 = svd.matrixU().leftCols(out.order);
  out.V1 = svd.matrixV().leftCols(out.order);
  out.S1 = s.head(out.order);
  Eigen::MatrixXd u1 = out.U1;
  if (w1.size() > 0) u1 = w1.partialPivLu().solve(u1);
  out.gamma = u1 * out.S1.cwiseSqrt().asDiagonal();
  return out;
}

StochasticRealization realize(const WeightedSvd& svd, const Projection& proj, double t_s,
                              const Eigen::VectorXd& d_offset) {
  const Eigen::Index m = proj.m;
  if (svd.order == 0) {
    // Degenerate order: only the covariance by-products are meaningful.
    StochasticRealization re;
    re.T_s = t_s;
    re.singular_values = svd.singular_values;
    re.Lambda0 = proj.Lambda0;
    re.d_offset = d_offset.size() > 0 ? d_offset : Eigen::VectorXd::Zero(m);
    return re;
  }
  const Eigen::Index p = svd.order;
  const Eigen::MatrixXd& gamma = svd.gamma;
  if (gamma.rows() != static_cast<Eigen::Index>(proj.m) * proj.i)
    throw std::invalid_argument("realize: observability rows != m*i");
  if (gamma.rows() - m < p)
    throw std::invalid_argument("realize: too few block rows for the shift solve");

  StochasticRealization re;
  re.order = p;
  re.T_s = t_s;
  re.singular_values = svd.singular_values;
  re.C_d = gamma.topRows(m);
  re.d_offset = d_offset.size() > 0 ? d_offset : Eigen::VectorXd::Zero(m);

  const Eigen::MatrixXd g_up = gamma.topRows(gamma.rows() - m);
  const Eigen::MatrixXd g_dn = gamma.bottomRows(gamma.rows() - m);
  re.shift_condition = linalg::condition_number(g_up);
  if (!(re.shift_condition < 1e12)) {
    std::ostringstream os;
    os << "realize: shift-invariance solve is ill-conditioned (cond = " << re.shift_condition
       << ")";
    throw std::runtime_error(os.str());
  }
  re.A_d = linalg::pinv(g_up) * g_dn;

  // Lag covariances factor as Gamma * [A^{i-1}G ... AG G]; G is the last
  // block column of the least-squares controllability factor.
  const Eigen::MatrixXd delta = linalg::pinv(gamma) * proj.Tfp;
  re.G = delta.rightCols(m);
  re.Lambda0 = proj.Lambda0;
  return re;
}

KalmanModel solve_riccati(const StochasticRealization& re, const RiccatiOptions& opts) {
  const Eigen::Index p = re.A_d.rows();
  const Eigen::Index m = re.C_d.rows();
  const Eigen::MatrixXd& a = re.A_d;
  const Eigen::MatrixXd& c = re.C_d;
  const Eigen::MatrixXd& g = re.G;
  const Eigen::MatrixXd& lam = re.Lambda0;

  KalmanModel km;
  km.A_d = a;
  km.C_d = c;
  km.d_offset = re.d_offset;
  const double floor_abs =
      opts.floor_rel * std::max(lam.trace() / static_cast<double>(m), 1e-300);

  Eigen::MatrixXd pmat = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd k_last;
  Eigen::MatrixXd innov;
  for (int it = 0; it < opts.max_iterations; ++it) {
    innov = lam - c * pmat * c.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (innov + innov.transpose()));
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -floor_abs)
      throw std::runtime_error(
          "solve_riccati: indefinite innovation covariance (invalid covariance realization)");
    if (min_eig <= floor_abs) {
      km.floor_stop = true;
      km.iterations = it;
      break;
    }
    const Eigen::MatrixXd gap = g - a * pmat * c.transpose();
    k_last = gap * innov.inverse();
    Eigen::MatrixXd pnext = a * pmat * a.transpose() + k_last * gap.transpose();
    pnext = 0.5 * (pnext + pnext.transpose());
    const double delta = (pnext - pmat).norm();
    pmat = pnext;
    km.iterations = it + 1;
    if (delta <= opts.tol * std::max(pmat.norm(), 1.0)) {
      km.converged = true;
      break;
    }
  }

  innov = lam - c * pmat * c.transpose();
  innov = 0.5 * (innov + innov.transpose());
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(innov);
    if (es.eigenvalues().minCoeff() > floor_abs)
      k_last = (g - a * pmat * c.transpose()) * innov.inverse();
  }
  if (k_last.size() == 0)
    throw std::runtime_error("solve_riccati: innovation covariance singular at start");

  km.P = pmat;
  km.K_f = k_last;
  km.innovation_cov = innov;
  {
    const Eigen::MatrixXd gap = g - a * pmat * c.transpose();
    const Eigen::MatrixXd rhs =
        a * pmat * a.transpose() + gap * linalg::pinv(innov) * gap.transpose();
    km.residual = (pmat - rhs).norm() / std::max(pmat.norm(), 1e-300);
  }
  km.rho_closed_loop =
      (a - km.K_f * c).eigenvalues().cwiseAbs().maxCoeff();
  return km;
}

StateSequence kalman_states(const KalmanModel& km, const Eigen::MatrixXd& y,
                            const Eigen::VectorXd& x0, const Eigen::VectorXd& d_offset) {
  const Eigen::Index p = km.A_d.rows();
  const Eigen::Index n = y.cols();
  if (y.rows() != km.C_d.rows()) throw std::invalid_argument("kalman_states: channel mismatch");
  const Eigen::VectorXd d = d_offset.size() > 0
                                ? d_offset
                                : (km.d_offset.size() > 0 ? km.d_offset
                                                          : Eigen::VectorXd::Zero(y.rows()));
  StateSequence seq;
  seq.X.resize(p, n);
  Eigen::VectorXd x = x0.size() > 0 ? x0 : Eigen::VectorXd::Zero(p);
  for (Eigen::Index k = 0; k < n; ++k) {
    seq.X.col(k) = x;
    const Eigen::VectorXd e = y.col(k) - d - km.C_d * x;
    x = km.A_d * x + km.K_f * e;
  }
  // Burn-in: ten closed-loop settling lengths, clamped to a quarter record.
  const double rho = km.rho_closed_loop;
  if (rho > 0.0 && rho < 1.0) {
    const double tau = -1.0 / std::log(rho);
    seq.burn_in = std::min<Eigen::Index>(
        n / 4, std::max<Eigen::Index>(20, static_cast<Eigen::Index>(10.0 * std::ceil(tau))));
  } else {
    seq.burn_in = n / 4;
  }
  return seq;
}

IdentifyResult identify(const Eigen::MatrixXd& y, double t_s, const IdentifyOptions& opts) {
  const Eigen::Index m = y.rows();
  const Eigen::VectorXd mean = y.rowwise().mean();
  const Eigen::MatrixXd yc = y.colwise() - mean;

  int i = opts.i;
  if (i <= 0) {
    const Eigen::Index target = opts.order_hint > 0 ? opts.order_hint : 2 * m;
    i = static_cast<int>(
            std::ceil(1.5 * static_cast<double>(target) / static_cast<double>(m))) +
        2;
  }
  IdentifyResult out;
  out.i = i;
  HankelPartition h = block_hankel(yc, i, opts.j);
  out.projection = project(h, opts.rank_tol);
  const WeightedSvd svd =
      weighted_svd(out.projection.core_oi, opts.w1, opts.w2, opts.order_hint);
  out.realization = realize(svd, out.projection, t_s, mean);
  return out;
}

}  // namespace physid::ssi
