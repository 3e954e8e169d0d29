#include "physid/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "physid/kernels.hpp"

namespace physid::recovery {

namespace {

constexpr double kTwoPi = 2.0 * EIGEN_PI;

using linalg::JordanBlock;

Eigen::MatrixXd right_solve(const Eigen::MatrixXd& y, const Eigen::MatrixXd& t) {
  // y * t^{-1}
  return t.transpose().partialPivLu().solve(y.transpose()).transpose();
}

}  // namespace

ContinuousModel to_continuous(const ssi::StochasticRealization& re, double t_s,
                              double unit_tol) {
  if (t_s <= 0.0) throw std::invalid_argument("to_continuous: T_s must be positive");
  ContinuousModel ct;
  ct.A_a = linalg::principal_log(re.A_d, unit_tol) / t_s;
  ct.C_a = re.C_d;
  return ct;
}

Eigen::MatrixXd SeparatedJordan::signal_state_map() const {
  return (T_J * T_a.partialPivLu().inverse()).bottomRows(J_u.rows());
}

SeparatedJordan separate_blocks(const Eigen::MatrixXd& a_a, const Eigen::MatrixXd& c_a,
                                const Eigen::VectorXd& x0,
                                const std::vector<double>& input_freqs_hz, bool dc,
                                const BlockMatchOptions& opts) {
  if (opts.tol_hz <= 0.0) throw std::invalid_argument("separate_blocks: tol_hz must be set");
  const linalg::JordanDecomposition jd = linalg::real_jordan(a_a);
  const Eigen::MatrixXd c_j = c_a * jd.T;
  Eigen::VectorXd x_j;
  if (x0.size() > 0) x_j = jd.T.partialPivLu().solve(x0);

  // Frequency slots: each repetition of a frequency in the list claims one
  // unit of block multiplicity; DC claims one real near-zero block.
  struct Slot {
    double freq_hz;
    int want;
    bool is_dc;
  };
  std::vector<Slot> slots;
  if (dc) slots.push_back({0.0, 1, true});
  {
    std::vector<double> sorted = input_freqs_hz;
    std::sort(sorted.begin(), sorted.end());
    for (size_t k = 0; k < sorted.size();) {
      size_t e = k;
      while (e < sorted.size() && sorted[e] - sorted[k] <= 1e-12 * std::max(1.0, sorted[k])) ++e;
      slots.push_back({sorted[k], static_cast<int>(e - k), false});
      k = e;
    }
  }

  SeparatedJordan sj;
  std::vector<int> route(jd.blocks.size(), 0);  // 0 = structural, 1 = signal

  std::vector<int> owner(jd.blocks.size(), -1);
  for (size_t s = 0; s < slots.size(); ++s) {
    for (size_t b = 0; b < jd.blocks.size(); ++b) {
      const JordanBlock& blk = jd.blocks[b];
      bool hit = false;
      if (slots[s].is_dc)
        hit = blk.kind == JordanBlock::Kind::real &&
              std::abs(blk.sigma) <= kTwoPi * opts.tol_hz;
      else
        hit = blk.kind == JordanBlock::Kind::complex_pair &&
              std::abs(blk.frequency_hz() - slots[s].freq_hz) <= opts.tol_hz;
      if (!hit) continue;
      if (owner[b] >= 0) {
        std::ostringstream os;
        os << "separate_blocks: block at " << blk.frequency_hz()
           << " Hz matches input frequencies " << slots[static_cast<size_t>(owner[b])].freq_hz
           << " and " << slots[s].freq_hz << " Hz; reduce tol_hz or change the excitation";
        throw std::runtime_error(os.str());
      }
      owner[b] = static_cast<int>(s);
    }
  }

  for (size_t s = 0; s < slots.size(); ++s) {
    std::vector<size_t> cand;
    int total = 0;
    for (size_t b = 0; b < jd.blocks.size(); ++b)
      if (owner[b] == static_cast<int>(s)) {
        cand.push_back(b);
        total += jd.blocks[b].multiplicity;
      }
    if (total < slots[s].want) {
      std::ostringstream os;
      os << "separate_blocks: input frequency " << slots[s].freq_hz << " Hz expects "
         << slots[s].want << " block(s) within " << opts.tol_hz << " Hz but found " << total;
      throw std::runtime_error(os.str());
    }
    if (total == slots[s].want) {
      for (size_t b : cand) route[b] = 1;
      continue;
    }
    // Over-matched window: a structural pole sits inside it too.
    if (opts.policy == BlockMatchOptions::Policy::strict) {
      std::ostringstream os;
      os << "separate_blocks: " << total << " block(s) within " << opts.tol_hz << " Hz of input "
         << slots[s].freq_hz << " Hz, expected " << slots[s].want
         << "; change the frequency components of the excitation";
      throw std::runtime_error(os.str());
    }
    // Damping tiebreak: signal poles are (near) undamped, structural poles are
    // not. Route the least-damped candidates if that choice is decisive.
    std::sort(cand.begin(), cand.end(), [&](size_t a, size_t b) {
      return jd.blocks[a].damping_ratio() < jd.blocks[b].damping_ratio();
    });
    int taken = 0;
    size_t idx = 0;
    for (; idx < cand.size() && taken < slots[s].want; ++idx) {
      taken += jd.blocks[cand[idx]].multiplicity;
      route[cand[idx]] = 1;
    }
    const bool exact = taken == slots[s].want;
    const double zeta_taken = jd.blocks[cand[idx - 1]].damping_ratio();
    const double zeta_next =
        idx < cand.size() ? jd.blocks[cand[idx]].damping_ratio() : 1.0;
    if (!exact || zeta_taken > opts.zeta_separation * zeta_next) {
      std::ostringstream os;
      os << "separate_blocks: ambiguous damping tiebreak near " << slots[s].freq_hz
         << " Hz (zeta " << zeta_taken << " vs " << zeta_next
         << "); change the frequency components of the excitation";
      throw std::runtime_error(os.str());
    }
    std::ostringstream os;
    os << "input frequency " << slots[s].freq_hz << " Hz over-matched; routed by damping ("
       << zeta_taken << " vs " << zeta_next << ")";
    sj.warnings.push_back(os.str());
  }

  // Permutation: structural blocks first, signal blocks after, both keeping
  // the canonical order produced by real_jordan.
  const Eigen::Index dim = a_a.rows();
  Eigen::MatrixXd perm = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::Index at = 0;
  auto place = [&](int which, std::vector<JordanBlock>& dest) {
    for (size_t b = 0; b < jd.blocks.size(); ++b) {
      if (route[b] != which) continue;
      JordanBlock nb = jd.blocks[b];
      for (Eigen::Index k = 0; k < nb.span_len; ++k)
        perm(at + k, jd.blocks[b].span_begin + k) = 1.0;
      nb.span_begin = which == 0 ? at : at - 0;  // rebased below
      dest.push_back(nb);
      at += nb.span_len;
    }
  };
  place(0, sj.blocks_s);
  const Eigen::Index dim_s = at;
  place(1, sj.blocks_u);
  for (JordanBlock& b : sj.blocks_u) b.span_begin -= dim_s;
  const Eigen::Index dim_u = dim - dim_s;

  const Eigen::MatrixXd a_perm = perm * jd.J * perm.transpose();
  const Eigen::MatrixXd c_perm = c_j * perm.transpose();
  sj.J_s = a_perm.topLeftCorner(dim_s, dim_s);
  sj.J_u = a_perm.bottomRightCorner(dim_u, dim_u);
  sj.Cbar_s = c_perm.leftCols(dim_s);
  sj.Cbar_u = c_perm.rightCols(dim_u);
  if (x_j.size() > 0) {
    const Eigen::VectorXd xp = perm * x_j;
    sj.xbar0_s = xp.head(dim_s);
    sj.xbar0_u = xp.tail(dim_u);
  }
  sj.T_a = jd.T;
  sj.T_J = perm;
  return sj;
}

std::vector<Mode> modal_params(const SeparatedJordan& sj) {
  std::vector<Mode> modes;
  for (const JordanBlock& b : sj.blocks_s) {
    for (int rep = 0; rep < b.multiplicity; ++rep) {
      Mode m;
      m.sigma = b.sigma;
      m.omega = b.omega;
      m.f_nat_rad_s = std::hypot(b.sigma, b.omega);
      m.f_nat_hz = m.f_nat_rad_s / kTwoPi;
      m.zeta = b.kind == JordanBlock::Kind::complex_pair
                   ? (m.f_nat_rad_s > 0.0 ? std::abs(b.sigma) / m.f_nat_rad_s : 0.0)
                   : 1.0;
      modes.push_back(m);
    }
  }
  std::sort(modes.begin(), modes.end(),
            [](const Mode& a, const Mode& b) { return a.f_nat_rad_s < b.f_nat_rad_s; });
  return modes;
}

TransformSolve solve_Ts(const SeparatedJordan& sj, const mech::SensorConfig& sensors) {
  const Eigen::Index dim_s = sj.J_s.rows();
  if (dim_s % 2 != 0)
    throw std::runtime_error("solve_Ts: structural dimension is odd; block separation failed");
  const Eigen::Index n = dim_s / 2;
  const Eigen::Index m = sj.Cbar_s.rows();
  if (sensors.C_p.cols() != n)
    throw std::invalid_argument("solve_Ts: sensor matrices do not match the DOF count");

  const Eigen::MatrixXd j11 = sj.J_s.topLeftCorner(n, n);
  const Eigen::MatrixXd j12 = sj.J_s.topRightCorner(n, n);
  const Eigen::MatrixXd j21 = sj.J_s.bottomLeftCorner(n, n);
  const Eigen::MatrixXd j22 = sj.J_s.bottomRightCorner(n, n);
  const Eigen::MatrixXd in = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd inn = Eigen::MatrixXd::Identity(n * n, n * n);
  const Eigen::MatrixXd znn = Eigen::MatrixXd::Zero(n * n, n * n);
  const Eigen::MatrixXd znm = Eigen::MatrixXd::Zero(n * m, n * n);

  // Unknown ordering (vec T11, vec T12, vec T21, vec T22).
  // State structure rows: T11 J11 + T12 J21 - T21 = 0 and
  //                       T11 J12 + T12 J22 - T22 = 0.
  // Output rows: Cp T11 + Cv T21 + Cac (T11 J11 + T12 J21) = Cbar_s(:,1:n)
  //              Cp T12 + Cv T22 + Cac (T21 J12 + T22 J22) = Cbar_s(:,n+1:2n).
  Eigen::MatrixXd v(2 * n * n + 2 * n * m, 4 * n * n);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(v.rows());

  v.block(0, 0, n * n, n * n) = linalg::kron(j11.transpose(), in);
  v.block(0, n * n, n * n, n * n) = linalg::kron(j21.transpose(), in);
  v.block(0, 2 * n * n, n * n, n * n) = -inn;
  v.block(0, 3 * n * n, n * n, n * n) = znn;

  v.block(n * n, 0, n * n, n * n) = linalg::kron(j12.transpose(), in);
  v.block(n * n, n * n, n * n, n * n) = linalg::kron(j22.transpose(), in);
  v.block(n * n, 2 * n * n, n * n, n * n) = znn;
  v.block(n * n, 3 * n * n, n * n, n * n) = -inn;

  const Eigen::Index r0 = 2 * n * n;
  v.block(r0, 0, n * m, n * n) =
      linalg::kron(in, sensors.C_p) + linalg::kron(j11.transpose(), sensors.C_ac);
  v.block(r0, n * n, n * m, n * n) = linalg::kron(j21.transpose(), sensors.C_ac);
  v.block(r0, 2 * n * n, n * m, n * n) = linalg::kron(in, sensors.C_v);
  v.block(r0, 3 * n * n, n * m, n * n) = znm;

  const Eigen::Index r1 = r0 + n * m;
  v.block(r1, 0, n * m, n * n) = znm;
  v.block(r1, n * n, n * m, n * n) = linalg::kron(in, sensors.C_p);
  v.block(r1, 2 * n * n, n * m, n * n) = linalg::kron(j12.transpose(), sensors.C_ac);
  v.block(r1, 3 * n * n, n * m, n * n) =
      linalg::kron(in, sensors.C_v) + linalg::kron(j22.transpose(), sensors.C_ac);

  w.segment(r0, n * m) = linalg::vec(sj.Cbar_s.leftCols(n));
  w.segment(r1, n * m) = linalg::vec(sj.Cbar_s.rightCols(n));

  const linalg::LeastSquaresSolution sol = linalg::solve_lsq(v, w);
  TransformSolve ts;
  ts.rank = sol.rank;
  ts.condition = sol.condition;
  ts.residual = sol.residual;
  ts.full_column_rank = sol.full_column_rank;
  ts.value.resize(2 * n, 2 * n);
  ts.value.topLeftCorner(n, n) = linalg::unvec(sol.x.segment(0, n * n), n, n);
  ts.value.topRightCorner(n, n) = linalg::unvec(sol.x.segment(n * n, n * n), n, n);
  ts.value.bottomLeftCorner(n, n) = linalg::unvec(sol.x.segment(2 * n * n, n * n), n, n);
  ts.value.bottomRightCorner(n, n) = linalg::unvec(sol.x.segment(3 * n * n, n * n), n, n);

  const double cond_ts = linalg::condition_number(ts.value);
  if (!(cond_ts < 1e12)) {
    std::ostringstream os;
    os << "solve_Ts: assembled transform is singular (cond = " << cond_ts
       << "); recovery is impossible with this sensor set";
    throw std::runtime_error(os.str());
  }
  return ts;
}

TransformSolve solve_X(const SeparatedJordan& sj, const Eigen::MatrixXd& t_s_hat,
                       const mech::SensorConfig& sensors) {
  const Eigen::Index dim_s = sj.J_s.rows();
  const Eigen::Index n = dim_s / 2;
  const Eigen::Index n_u = sj.J_u.rows();
  const Eigen::Index m = sj.Cbar_u.rows();

  const Eigen::MatrixXd h1ts = t_s_hat.topRows(n);       // H1 T_s
  const Eigen::MatrixXd h2ts = t_s_hat.bottomRows(n);    // H2 T_s
  const Eigen::MatrixXd inu = Eigen::MatrixXd::Identity(n_u, n_u);
  const Eigen::MatrixXd cach2ts = sensors.C_ac * h2ts;

  // From H1 T_s (-J_s X + X J_u) = 0 and
  //      C_ac H2 T_s (-J_s X + X J_u) + Cbar_s X = Cbar_u.
  Eigen::MatrixXd f(n * n_u + m * n_u, dim_s * n_u);
  f.topRows(n * n_u) = -linalg::kron(inu, h1ts * sj.J_s) +
                       linalg::kron(sj.J_u.transpose(), h1ts);
  f.bottomRows(m * n_u) = linalg::kron(inu, sj.Cbar_s - cach2ts * sj.J_s) +
                          linalg::kron(sj.J_u.transpose(), cach2ts);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(f.rows());
  g.tail(m * n_u) = linalg::vec(sj.Cbar_u);

  const linalg::LeastSquaresSolution sol = linalg::solve_lsq(f, g);
  TransformSolve xs;
  xs.rank = sol.rank;
  xs.condition = sol.condition;
  xs.residual = sol.residual;
  xs.full_column_rank = sol.full_column_rank;
  if (!sol.full_column_rank) {
    std::ostringstream os;
    os << "solve_X: coefficient matrix is rank deficient (" << sol.rank << " of " << f.cols()
       << "); change the frequency components of the input signal";
    throw std::runtime_error(os.str());
  }
  xs.value = linalg::unvec(sol.x, dim_s, n_u);
  return xs;
}

PhysicalEstimate assemble_physical(const SeparatedJordan& sj, const TransformSolve& ts,
                                   const TransformSolve& x,
                                   const mech::SensorConfig& sensors,
                                   bool stability_enforce) {
  PhysicalEstimate pe;
  pe.T_s_hat = ts.value;
  pe.X_hat = x.value;
  pe.ts_diag = ts;
  pe.x_diag = x;

  if (sensors.outputs() != sj.Cbar_s.rows())
    throw std::invalid_argument("assemble_physical: sensor rows != output count");
  const Eigen::Index n = ts.value.rows() / 2;
  Eigen::MatrixXd a_s = ts.value * right_solve(sj.J_s, ts.value);
  pe.C_s_hat = right_solve(sj.Cbar_s, ts.value);

  if (stability_enforce) {
    linalg::JordanDecomposition jd = linalg::real_jordan(a_s);
    for (linalg::JordanBlock& b : jd.blocks) {
      if (b.sigma > 0.0) {
        b.sigma = -b.sigma;
        ++pe.reflected_modes;
      }
    }
    if (pe.reflected_modes > 0) {
      const Eigen::MatrixXd j_fixed = linalg::jordan_matrix(jd.blocks);
      a_s = jd.T * right_solve(j_fixed, jd.T);
    }
  }

  pe.A_s_hat = a_s;
  pe.K_norm = -a_s.block(n, 0, n, n);
  pe.D_norm = -a_s.block(n, n, n, n);
  pe.structural_residual =
      std::sqrt(a_s.topLeftCorner(n, n).squaredNorm() +
                (a_s.topRightCorner(n, n) - Eigen::MatrixXd::Identity(n, n)).squaredNorm());

  // Modal parameters from the separated blocks, shapes from the eigenvectors
  // of the recovered A_s restricted to the displacement coordinates.
  pe.modes = modal_params(sj);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a_s);
  const Eigen::VectorXcd lam = es.eigenvalues();
  std::vector<bool> used(static_cast<size_t>(lam.size()), false);
  for (Mode& mode : pe.modes) {
    Eigen::Index best = -1;
    double best_d = std::numeric_limits<double>::max();
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
      if (used[static_cast<size_t>(k)] || lam(k).imag() < 0.0) continue;
      const double d = std::hypot(lam(k).real() - mode.sigma, lam(k).imag() - mode.omega);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    if (best < 0) continue;
    used[static_cast<size_t>(best)] = true;
    Eigen::VectorXcd v = es.eigenvectors().col(best).head(n);
    Eigen::Index kmax = 0;
    v.cwiseAbs().maxCoeff(&kmax);
    if (std::abs(v(kmax)) > 0.0) v /= v(kmax);  // unit max modulus, zero phase there
    mode.shape = v;
  }
  return pe;
}

InputReconstruction reconstruct_input(const SeparatedJordan& sj,
                                      const Eigen::MatrixXd& t_s_hat,
                                      const Eigen::MatrixXd& x_hat,
                                      const Eigen::MatrixXd& states, Eigen::Index burn_in) {
  const Eigen::Index n = t_s_hat.rows() / 2;
  const Eigen::MatrixXd coupling = t_s_hat * (-sj.J_s * x_hat + x_hat * sj.J_u);
  InputReconstruction rec;
  rec.xu = kernels::left_apply(sj.signal_state_map(), states);
  rec.fe_full = kernels::left_apply(coupling, rec.xu);
  rec.fe = rec.fe_full.bottomRows(n);
  rec.valid_from = std::min(burn_in, states.cols());
  return rec;
}

InputMatrixEstimate estimate_Bs(const Eigen::MatrixXd& fe_full, const Eigen::MatrixXd& u,
                                const mech::SensorConfig& sensors, Eigen::Index valid_from) {
  if (fe_full.cols() != u.cols()) throw std::invalid_argument("estimate_Bs: length mismatch");
  const Eigen::Index n_use = u.cols() - valid_from;
  if (n_use < u.rows()) throw std::invalid_argument("estimate_Bs: too few samples");
  const Eigen::MatrixXd uw = u.rightCols(n_use);
  const ssi::PersistentExcitation pe = ssi::pe_order(uw, 1);
  if (!pe.satisfied)
    throw std::runtime_error(
        "estimate_Bs: input record is not persistently exciting of order 1");
  const Eigen::MatrixXd uut = kernels::gram(uw);
  const Eigen::MatrixXd feut = kernels::cross_gram(fe_full.rightCols(n_use), uw);
  InputMatrixEstimate est;
  est.B_s_hat = feut * linalg::pinv(uut);
  const Eigen::Index n = fe_full.rows() / 2;
  est.D_s_hat = sensors.C_ac * est.B_s_hat.bottomRows(n);
  return est;
}

ObservabilityCheck check_observability(Eigen::Index n, Eigen::Index r, Eigen::Index m,
                                       const mech::SensorConfig& sensors) {
  ObservabilityCheck oc;
  if (r < m) {
    oc.observable = true;
    oc.reason = "input count below output count: every input channel is recoverable";
    return oc;
  }
  if (r > m) {
    oc.observable = false;
    oc.reason = "input count exceeds output count: the transfer matrix has no left inverse";
    return oc;
  }
  const bool zero_p = sensors.C_p.size() == 0 || sensors.C_p.isZero(1e-12);
  const bool zero_v = sensors.C_v.size() == 0 || sensors.C_v.isZero(1e-12);
  const bool cac_full_rank =
      sensors.C_ac.size() > 0 &&
      Eigen::FullPivLU<Eigen::MatrixXd>(sensors.C_ac).rank() == std::min(m, n);
  if (zero_p && zero_v && cac_full_rank) {
    oc.observable = true;
    oc.reason =
        "equal input and output counts with pure full-rank acceleration sensing: "
        "C_s B_s is full column rank";
  } else {
    oc.observable = false;
    oc.reason =
        "equal input and output counts but the sensing is not pure full-rank "
        "acceleration; full column rank of C_s B_s is not guaranteed";
  }
  return oc;
}

}  // namespace physid::recovery
