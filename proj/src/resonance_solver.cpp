#include "twistres/resonance_solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "twistres/errors.hpp"

namespace twistres {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

constexpr double kPi = 3.14159265358979323846;
const cplx kI(0.0, 1.0);

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Applies the channel kernels to z = etaw .* x_col by prefix/suffix
// recurrences:  t12 = resolvent core (kind i / ii), t3 = derivative core
// (kind iii).  The conjugated kernel equals the same code with
// kappa -> -conj(kappa), k -> -conj(k).
void channel_kernels(const VectorXcd& z, const VectorXd& x, double h, double L,
                     cplx kappa, bool threshold, cplx k, VectorXcd& t12,
                     VectorXcd& t3) {
  const int n = static_cast<int>(z.size());
  const cplx rho = std::exp(kI * kappa * h);
  VectorXcd S(n), B(n);
  S[0] = z[0];
  for (int i = 1; i < n; ++i) S[i] = rho * S[i - 1] + z[i];
  B[n - 1] = 0.0;
  for (int i = n - 2; i >= 0; --i) B[i] = rho * (B[i + 1] + z[i + 1]);

  t3 = -0.5 * (S - z - B);
  if (!threshold) {
    t12 = (kI / (2.0 * kappa)) * (S + B);
    return;
  }
  if (std::abs(k) * 2.0 * L > 1e-4) {
    const cplx tot = z.sum();
    t12 = (kI / (2.0 * k)) * (S.array() + B.array() - tot).matrix();
    return;
  }
  // series core: -d/2 - i k d^2/4 + k^2 d^3/12 + i k^3 d^4/48,  d = |x_i-x_j|
  MatrixXcd P(n, 5), Sf(n, 5);
  for (int t = 0; t < 5; ++t) {
    P(0, t) = std::pow(x[0], t) * z[0];
    for (int i = 1; i < n; ++i) P(i, t) = P(i - 1, t) + std::pow(x[i], t) * z[i];
    Sf(n - 1, t) = 0.0;
    for (int i = n - 2; i >= 0; --i)
      Sf(i, t) = Sf(i + 1, t) + std::pow(x[i + 1], t) * z[i + 1];
  }
  static const double binom[5][5] = {{1, 0, 0, 0, 0},
                                     {1, 1, 0, 0, 0},
                                     {1, 2, 1, 0, 0},
                                     {1, 3, 3, 1, 0},
                                     {1, 4, 6, 4, 1}};
  const cplx coef[5] = {0.0, -0.5, -kI * k / 4.0, k * k / 12.0,
                        kI * k * k * k / 48.0};
  t12.setZero(n);
  for (int i = 0; i < n; ++i) {
    cplx acc = 0.0;
    for (int m = 1; m <= 4; ++m) {
      cplx dm = 0.0;
      for (int t = 0; t <= m; ++t) {
        const double xp = std::pow(x[i], m - t);
        const double sl = (t % 2 == 0) ? 1.0 : -1.0;
        const double sr = ((m - t) % 2 == 0) ? 1.0 : -1.0;
        dm += binom[m][t] * xp * (sl * P(i, t) + sr * Sf(i, t));
      }
      acc += coef[m] * dm;
    }
    t12[i] = acc;
  }
}

struct GmresStats {
  int iterations = 0;
  double relres = 0;
  bool converged = false;
};

template <class Apply>
GmresStats gmres(Apply&& A, const VectorXcd& b, VectorXcd& x, double tol,
                 int restart, int maxit) {
  GmresStats st;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero(b.size());
    st.converged = true;
    return st;
  }
  if (x.size() != b.size()) x = VectorXcd::Zero(b.size());
  int total = 0;
  while (total < maxit) {
    VectorXcd r = b - A(x);
    double beta = r.norm();
    st.relres = beta / bnorm;
    if (st.relres <= tol) {
      st.converged = true;
      return st;
    }
    std::vector<VectorXcd> V;
    V.push_back(r / beta);
    const int m = std::min(restart, maxit - total);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
    std::vector<cplx> cs(m), sn(m);
    VectorXcd g = VectorXcd::Zero(m + 1);
    g[0] = beta;
    int j = 0;
    for (; j < m; ++j) {
      VectorXcd w = A(V[j]);
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V[i].dot(w);  // conjugates V[i]
        w -= H(i, j) * V[i];
      }
      H(j + 1, j) = w.norm();
      ++total;
      if (std::abs(H(j + 1, j)) > 1e-300) V.push_back(w / H(j + 1, j));
      // Givens rotations
      for (int i = 0; i < j; ++i) {
        const cplx t = std::conj(cs[i]) * H(i, j) + std::conj(sn[i]) * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double denom =
          std::sqrt(std::norm(H(j, j)) + std::norm(H(j + 1, j)));
      if (denom < 1e-300) {
        cs[j] = 1.0;
        sn[j] = 0.0;
      } else {
        cs[j] = H(j, j) / denom;
        sn[j] = H(j + 1, j) / denom;
      }
      H(j, j) = std::conj(cs[j]) * H(j, j) + std::conj(sn[j]) * H(j + 1, j);
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = std::conj(cs[j]) * g[j];
      st.relres = std::abs(g[j + 1]) / bnorm;
      st.iterations = total;
      if (st.relres <= tol || static_cast<int>(V.size()) == j + 1) {
        ++j;
        break;
      }
    }
    // back substitution
    VectorXcd y = VectorXcd::Zero(j);
    for (int i = j - 1; i >= 0; --i) {
      cplx s = g[i];
      for (int l = i + 1; l < j; ++l) s -= H(i, l) * y[l];
      y[i] = s / H(i, i);
    }
    for (int i = 0; i < j; ++i) x += y[i] * V[i];
    if (st.relres <= tol) {
      st.converged = true;
      return st;
    }
  }
  return st;
}

}  // namespace

void TwistOperator::apply(const MatrixXcd& X, MatrixXcd& out,
                          bool adjoint) const {
  out.resize(n, Q);
  VectorXcd t12(n), t3(n), z(n);
  if (!adjoint) {
    MatrixXcd U(n, Q), V(n, Q);
    for (int q = 0; q < Q; ++q) {
      z = etaw.cwiseProduct(X.col(q));
      channel_kernels(z, x, h, L, kappa[q], threshold_channel[q] != 0, k, t12,
                      t3);
      U.col(q) = -2.0 * la.cwiseProduct(t3) - lb.cwiseProduct(t12);
      V.col(q) = -lc.cwiseProduct(t12);
    }
    out.noalias() = U * At;
    out.noalias() += delta * (V * Bt);
    return;
  }
  // T^H: mix first, then the conjugated kernels channel by channel.
  MatrixXcd Ya = X * At.adjoint();
  MatrixXcd Yb = X * Bt.adjoint();
  for (int q = 0; q < Q; ++q) {
    const cplx kap = -std::conj(kappa[q]);
    const cplx kk = -std::conj(k);
    // u-stream
    z = la.conjugate().cwiseProduct(Ya.col(q));
    channel_kernels(z, x, h, L, kap, threshold_channel[q] != 0, kk, t12, t3);
    VectorXcd acc = 2.0 * t3;  // (kind iii)^H = -conj core
    z = lb.conjugate().cwiseProduct(Ya.col(q)) +
        delta * lc.conjugate().cwiseProduct(Yb.col(q));
    VectorXcd t12b(n), t3b(n);
    channel_kernels(z, x, h, L, kap, threshold_channel[q] != 0, kk, t12b, t3b);
    acc -= t12b;
    out.col(q) = etaw.conjugate().cwiseProduct(acc);
  }
}

VectorXcd TwistOperator::apply_vec(const VectorXcd& v, bool adjoint) const {
  Eigen::Map<const MatrixXcd> X(v.data(), n, Q);
  MatrixXcd out;
  apply(X, out, adjoint);
  return Eigen::Map<VectorXcd>(out.data(), out.size());
}

double TwistOperator::norm_estimate(int iterations) const {
  VectorXcd v = VectorXcd::Ones(dim());
  v /= v.norm();
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    VectorXcd w = apply_vec(v);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    VectorXcd u = apply_vec(w / wn, true);
    sigma = std::sqrt(u.norm() * wn);
    v = u / u.norm();
  }
  return sigma;
}

MatrixXcd TwistOperator::to_dense() const {
  if (dim() > 4000)
    throw ConfigError("to_dense is restricted to test-size operators");
  MatrixXcd D(dim(), dim());
  VectorXcd e = VectorXcd::Zero(dim());
  for (long c = 0; c < dim(); ++c) {
    e[c] = 1.0;
    D.col(c) = apply_vec(e);
    e[c] = 0.0;
  }
  return D;
}

TwistOperator assemble_T(const ModeSet& modes, const CouplingTable& couplings,
                         const TwistProfile& profile,
                         const WeightConfig& weights, const Grid1D& grid,
                         double delta, cplx k) {
  TwistOperator op;
  op.n = grid.size();
  op.Q = modes.count();
  op.delta = delta;
  op.k = k;
  op.L = grid.L;
  op.h = grid.h;
  op.x = grid.x;
  op.etaw.resize(op.n);
  op.la.resize(op.n);
  op.lb.resize(op.n);
  op.lc.resize(op.n);
  for (int i = 0; i < op.n; ++i) {
    const double eta = weights.eta(grid.x[i]);
    const double e = profile.eval(grid.x[i]);
    op.etaw[i] = eta * grid.w[i];
    op.la[i] = e / eta;
    op.lb[i] = profile.deriv(grid.x[i]) / eta;
    op.lc[i] = e * e / eta;
  }
  if (!op.la.allFinite() || !op.lb.allFinite() || !op.lc.allFinite())
    throw ConfigError("eta^{-1} eps sampling overflowed; N too large");
  const int q0 = couplings.q0;
  const double lambda_th = modes.clusters[q0].lambda;
  op.kappa.resize(op.Q);
  op.threshold_channel.assign(op.Q, 0);
  for (int q = 0; q < op.Q; ++q) {
    if (modes.cluster_index[q] == q0) {
      op.threshold_channel[q] = 1;
      op.kappa[q] = k;
    } else {
      op.kappa[q] = branch_momentum(modes.lambda(q), lambda_th, k);
    }
  }
  op.At = couplings.a.transpose().cast<cplx>();
  op.Bt = couplings.b.transpose().cast<cplx>();
  return op;
}

MatrixXcd assemble_phi(const ModeSet& modes, const CouplingTable& couplings,
                       const TwistProfile& profile,
                       const WeightConfig& weights, const Grid1D& grid,
                       double delta, int j) {
  const Cluster& cl = modes.clusters[couplings.q0];
  if (j < 0 || j >= cl.size)
    throw ConfigError("cluster member index out of range");
  const int g = cl.first + j;
  const int n = grid.size();
  MatrixXcd phi(n, modes.count());
  VectorXd f1(n), f2(n);
  for (int i = 0; i < n; ++i) {
    const double eta = weights.eta(grid.x[i]);
    f1[i] = profile.deriv(grid.x[i]) / eta;
    const double e = profile.eval(grid.x[i]);
    f2[i] = e * e / eta;
  }
  if (!f1.allFinite() || !f2.allFinite())
    throw ConfigError("eta^{-1} eps' sampling overflowed; N too large");
  for (int p = 0; p < modes.count(); ++p) {
    const double ap = couplings.a(p, g);
    const double bp = couplings.b(p, g);
    phi.col(p) = (-0.5 * kI) * (ap * f1 + delta * bp * f2).cast<cplx>();
  }
  return phi;
}

SolverConfig resolve_solver_config(SolverConfig cfg, const ModeSet& modes,
                                   int q0_cluster,
                                   const TwistProfile& profile) {
  if (q0_cluster < 0 ||
      q0_cluster >= static_cast<int>(modes.clusters.size()))
    throw ConfigError("threshold cluster index out of range");
  const double r0 = modes.clusters[q0_cluster].r0;
  if (!(r0 > 0)) throw ConfigError("cluster gap radius r0 is zero");
  const double alpha = profile.is_zero()
                           ? std::numeric_limits<double>::infinity()
                           : profile.alpha();
  if (cfg.r <= 0.0) cfg.r = 0.75 * std::min(r0, 0.5 * alpha);
  if (!(cfg.r < r0))
    throw ConfigError("solver radius violates r < r0 (r = " + fmt(cfg.r) +
                      ", r0 = " + fmt(r0) + ")");
  if (cfg.N <= 0.0) cfg.N = std::min(0.5 * (cfg.r + 0.5 * alpha), cfg.r + 2.5);
  check_weight_window(cfg.N, cfg.r, alpha);
  if (cfg.contour_rho <= 0.0)
    cfg.contour_rho = std::min(0.5 * r0, 0.9 * cfg.r);
  if (!(cfg.contour_rho < cfg.r))
    throw ConfigError("contour radius violates rho < r");
  if (!(cfg.L >= 10.0 * profile.width()) && !profile.is_zero())
    throw ConfigError("axis truncation violates L >= 10 * profile width");
  if (!profile.is_zero()) {
    const DecayCertificate cert = validate_decay(profile, 2.0 * cfg.N);
    if (!cert.ok)
      throw CertificationError(
          "decay certificate failed at rate 2N near x = " +
          fmt(cert.offending_x));
  }
  return cfg;
}

ResonanceEngine::ResonanceEngine(const ModeSet& modes,
                                 const CouplingTable& couplings,
                                 const TwistProfile& profile,
                                 const SolverConfig& resolved, double delta)
    : modes_(modes),
      couplings_(couplings),
      profile_(profile),
      cfg_(resolved),
      delta_(delta),
      q0_(couplings.q0),
      m0_(couplings.m0),
      grid_(Grid1D::make(resolved.L, resolved.h3)),
      weights_{resolved.N} {
  phi_.resize(m0_);
  warm_.resize(m0_);
  warm_valid_.assign(m0_, 0);
  for (int j = 0; j < m0_; ++j)
    phi_[j] = assemble_phi(modes_, couplings_, profile_, weights_, grid_,
                           delta_, j);
}

MatrixXcd ResonanceEngine::w_matrix(cplx k) {
  const TwistOperator T =
      assemble_T(modes_, couplings_, profile_, weights_, grid_, delta_, k);
  const Cluster& cl = modes_.clusters[q0_];
  MatrixXcd w(m0_, m0_);
  VectorXcd pair(grid_.size());
  for (int i = 0; i < grid_.size(); ++i)
    pair[i] = weights_.eta(grid_.x[i]) * grid_.w[i];
  for (int j = 0; j < m0_; ++j) {
    const VectorXcd b =
        Eigen::Map<const VectorXcd>(phi_[j].data(), phi_[j].size());
    VectorXcd x0;
    if (warm_valid_[j])
      x0 = Eigen::Map<VectorXcd>(warm_[j].data(), warm_[j].size());
    auto applyA = [&](const VectorXcd& v) {
      return (v + delta_ * T.apply_vec(v)).eval();
    };
    GmresStats st = gmres(applyA, b, x0, cfg_.gmres_tol, cfg_.gmres_restart,
                          cfg_.gmres_maxit);
    solves_ += st.iterations;
    if (!st.converged)
      throw ConvergenceError(
          "linear solve for (Id + delta T) stalled at relative residual " +
          fmt(st.relres) + "; delta too large (||delta T|| ~ " +
          fmt(delta_ * T.norm_estimate(10)) + ")");
    warm_[j] = Eigen::Map<MatrixXcd>(x0.data(), grid_.size(), modes_.count());
    warm_valid_[j] = 1;
    for (int l = 0; l < m0_; ++l) {
      // <x, psi_l (x) eta>, linear in the first slot
      w(j, l) = delta_ * warm_[j].col(cl.first + l).cwiseProduct(pair).sum();
    }
  }
  return w;
}

MatrixXcd ResonanceEngine::M_matrix(cplx k) {
  MatrixXcd M = w_matrix(k);
  for (int j = 0; j < m0_; ++j) M(j, j) += k;
  return M;
}

cplx ResonanceEngine::det_M(cplx k) {
  const MatrixXcd M = M_matrix(k);
  if (m0_ == 1) return M(0, 0);
  if (m0_ == 2) return M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
  return Eigen::PartialPivLU<MatrixXcd>(M).determinant();
}

double ResonanceEngine::delta_T_norm() {
  const double rho = cfg_.contour_rho;
  const cplx probes[4] = {cplx(0, 0), cplx(rho, 0), cplx(0, 0.99 * rho),
                          cplx(0, -0.99 * rho)};
  double nrm = 0.0;
  for (const cplx& k : probes) {
    const TwistOperator T =
        assemble_T(modes_, couplings_, profile_, weights_, grid_, delta_, k);
    nrm = std::max(nrm, delta_ * T.norm_estimate());
  }
  return nrm;
}

namespace {

// Winding of f over the circle |k - 0| = rho by phase accumulation with
// adaptive node doubling; nodes are reused when doubling.
int winding_number(const std::function<cplx(cplx)>& f, double rho,
                   int start_nodes, int max_nodes, double* max_step = nullptr) {
  int n = std::max(8, start_nodes);
  std::vector<cplx> vals(n);
  for (int j = 0; j < n; ++j) {
    const double th = 2.0 * kPi * j / n;
    vals[j] = f(rho * std::exp(kI * th));
  }
  while (true) {
    double total = 0.0, worst = 0.0;
    bool ok = true;
    for (int j = 0; j < n; ++j) {
      const cplx a = vals[j], b = vals[(j + 1) % n];
      if (a == 0.0 || b == 0.0)
        throw ConvergenceError("det vanished on the contour; perturb rho");
      const double dphi = std::arg(b / a);
      worst = std::max(worst, std::abs(dphi));
      if (std::abs(dphi) > 0.5 * kPi) {
        ok = false;
        break;
      }
      total += dphi;
    }
    if (ok) {
      const double wind = total / (2.0 * kPi);
      if (max_step) *max_step = worst;
      const double rounded = std::round(wind);
      if (std::abs(wind - rounded) > 0.01)
        throw ConvergenceError(
            "non-integer winding " + fmt(wind) +
            "; contour unstable, suggest perturbing rho by ~5%");
      return static_cast<int>(rounded);
    }
    if (2 * n > max_nodes)
      throw ConvergenceError("winding did not stabilize with " + fmt(n) +
                             " contour nodes; suggest perturbing rho");
    std::vector<cplx> next(2 * n);
    for (int j = 0; j < n; ++j) {
      next[2 * j] = vals[j];
      const double th = 2.0 * kPi * (2 * j + 1) / (2 * n);
      next[2 * j + 1] = f(rho * std::exp(kI * th));
    }
    vals = std::move(next);
    n *= 2;
  }
}

struct NewtonOutcome {
  cplx k;
  double residual = 0;
  bool converged = false;
  int iterations = 0;
};

NewtonOutcome newton_root(const std::function<cplx(cplx)>& f, cplx seed,
                          double tol_k, double disc_radius, int maxit) {
  NewtonOutcome out;
  cplx k = seed;
  for (int it = 0; it < maxit; ++it) {
    out.iterations = it + 1;
    const cplx fk = f(k);
    const double hstep = std::max({1e-4 * std::abs(k), 1e-2 * tol_k, 1e-13});
    const cplx fp = (f(k + hstep) - f(k - hstep)) / (2.0 * hstep);
    if (std::abs(fp) < 1e-300) break;
    cplx dk = -fk / fp;
    if (std::abs(dk) > 0.25 * disc_radius)
      dk *= 0.25 * disc_radius / std::abs(dk);
    k += dk;
    if (std::abs(k) > 2.0 * disc_radius) break;  // running away
    if (std::abs(dk) <= std::max(tol_k, 1e-9 * std::abs(k))) {
      out.converged = true;
      break;
    }
  }
  out.k = k;
  out.residual = std::abs(f(k));
  return out;
}

}  // namespace

ResonanceReport find_resonances(const ModeSet& modes,
                                const CouplingTable& couplings,
                                const TwistProfile& profile, SolverConfig cfg,
                                double delta) {
  cfg = resolve_solver_config(cfg, modes, couplings.q0, profile);
  ResonanceReport rep;
  rep.delta = delta;
  rep.m0 = couplings.m0;
  rep.upsilon = compute_upsilon(modes, couplings, profile);
  rep.predictions = predicted_resonances(rep.upsilon, delta);
  rep.contour_radius = cfg.contour_rho;

  ResonanceEngine engine(modes, couplings, profile, cfg, delta);
  rep.delta_T_norm = engine.delta_T_norm();
  if (rep.delta_T_norm >= 0.5)
    throw CertificationError("||delta T|| = " + fmt(rep.delta_T_norm) +
                             " >= 1/2; results not certified, reduce delta");
  rep.certified = true;
  auto det = [&](cplx k) { return engine.det_M(k); };

  // Newton seeds from the asymptotics; duplicates fanned out so split pairs
  // are found separately.
  std::vector<cplx> seeds;
  for (const cplx& p : rep.predictions) {
    if (std::abs(p) < std::max(100.0 * cfg.tol_k, 1e-14)) {
      rep.log.push_back("seed at origin skipped (prediction ~ 0)");
      continue;
    }
    if (std::abs(p) > 0.9 * cfg.r) {
      rep.log.push_back("prediction outside the working disc skipped");
      continue;
    }
    seeds.push_back(p);
  }
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    int dup = 0;
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(seeds[i] - seeds[j]) < 1e-6 * std::abs(seeds[i])) ++dup;
    if (dup > 0)
      seeds[i] *= 1.0 + 0.04 * std::exp(kI * (2.0 * kPi * dup / 4.0));
  }

  auto add_root = [&](const NewtonOutcome& nw) {
    if (!nw.converged) {
      rep.log.push_back("newton did not converge after " +
                        fmt(nw.iterations) + " iterations");
      return;
    }
    if (std::abs(nw.k) >= cfg.r) {
      rep.log.push_back("root outside the working disc discarded");
      return;
    }
    if (std::abs(nw.k) < std::max(10.0 * cfg.tol_k, 1e-13)) {
      rep.log.push_back("root at the branch point k = 0 not a resonance");
      return;
    }
    for (const auto& r : rep.roots)
      if (std::abs(r.k - nw.k) <=
          std::max(20.0 * cfg.tol_k, 1e-6 * std::abs(nw.k)))
        return;  // duplicate
    ResonanceRoot root;
    root.k = nw.k;
    root.residual = nw.residual;
    root.purity = std::abs(nw.k.real()) / std::abs(nw.k);
    rep.roots.push_back(root);
  };
  for (const cplx& s : seeds)
    add_root(newton_root(det, s, cfg.tol_k, cfg.r, cfg.max_newton));

  // contour count; keep roots clear of the contour
  double rho = cfg.contour_rho;
  for (int attempt = 0; attempt < 5; ++attempt) {
    bool clear = true;
    for (const auto& r : rep.roots)
      if (std::abs(std::abs(r.k) - rho) <
          std::max(10.0 * cfg.tol_k, 1e-6 * rho))
        clear = false;
    if (clear) break;
    rho *= 1.05;
  }
  rep.contour_radius = rho;
  rep.winding_raw =
      winding_number(det, rho, cfg.contour_nodes, 4096);

  // origin det-zero bookkeeping: remove the k = 0 branch-point zero
  const double rho_tiny = std::max(1e-6 * rho, 10.0 * cfg.tol_k);
  double tiny_max = 0.0;
  for (int j = 0; j < 8; ++j) {
    const double th = 2.0 * kPi * j / 8.0;
    tiny_max = std::max(tiny_max,
                        std::abs(det(rho_tiny * std::exp(kI * th))));
  }
  const double det0 = std::abs(det(0.0));
  if (det0 <= 1e-8 * tiny_max) {
    rep.origin_multiplicity = winding_number(det, rho_tiny, 16, 1024);
    rep.log.push_back("det has a zero of multiplicity " +
                      fmt(rep.origin_multiplicity) +
                      " at the branch point k = 0 (not a resonance)");
  }
  rep.winding = rep.winding_raw - rep.origin_multiplicity;

  // recover missed zeros by a coarse scan when the count disagrees
  if (static_cast<int>(rep.roots.size()) < rep.winding) {
    for (int ir = 0; ir < 6 && static_cast<int>(rep.roots.size()) < rep.winding;
         ++ir) {
      const double rr = rho * std::pow(10.0, -5.0 + 5.0 * ir / 5.0);
      for (int ia = 0; ia < 12; ++ia) {
        const cplx s = rr * std::exp(kI * (2.0 * kPi * ia / 12.0));
        add_root(newton_root(det, s, cfg.tol_k, cfg.r, cfg.max_newton));
      }
    }
    if (static_cast<int>(rep.roots.size()) < rep.winding)
      rep.log.push_back(
          "winding exceeds the located roots; unresolved multiplicity");
  }

  // per-root multiplicity and residue rank
  for (auto& root : rep.roots) {
    double sep = std::abs(root.k);  // distance to origin
    for (const auto& other : rep.roots)
      if (&other != &root)
        sep = std::min(sep, std::abs(other.k - root.k));
    if (rep.m0 > 1) {
      const double rloc =
          std::min(0.4 * sep, 0.2 * std::abs(root.k));
      if (rloc > 10.0 * cfg.tol_k) {
        auto local = [&](cplx kk) { return det(root.k + kk); };
        root.multiplicity = winding_number(local, rloc, 16, 512);
        MatrixXcd R = MatrixXcd::Zero(rep.m0, rep.m0);
        const int nn = 16;
        for (int j = 0; j < nn; ++j) {
          const double th = 2.0 * kPi * j / nn;
          const cplx kk = root.k + rloc * std::exp(kI * th);
          const MatrixXcd Minv = engine.M_matrix(kk).inverse();
          R += Minv * (rloc * std::exp(kI * th)) / double(nn);
        }
        Eigen::JacobiSVD<MatrixXcd> svd(R);
        const double smax = svd.singularValues()[0];
        root.residue_rank = 0;
        for (int i = 0; i < rep.m0; ++i)
          if (svd.singularValues()[i] > 1e-8 * smax) ++root.residue_rank;
      }
    }
  }

  // match roots to predictions
  for (auto& root : rep.roots) {
    double best = std::numeric_limits<double>::infinity();
    for (const cplx& p : rep.predictions) {
      const double d = std::abs(root.k - p);
      if (d < best) {
        best = d;
        root.predicted = p;
      }
    }
    if (std::abs(root.predicted) > 0.0)
      root.rel_deviation = best / std::abs(root.predicted);
  }
  std::sort(rep.roots.begin(), rep.roots.end(),
            [](const ResonanceRoot& l, const ResonanceRoot& r) {
              if (l.k.imag() != r.k.imag()) return l.k.imag() > r.k.imag();
              return l.k.real() < r.k.real();
            });

  int mult_total = 0;
  for (const auto& r : rep.roots) mult_total += r.multiplicity;
  if (rep.winding > rep.m0)
    rep.log.push_back("winding exceeds the multiplicity bound m0");
  if (mult_total > rep.winding)
    rep.log.push_back("located multiplicities exceed the contour count");
  return rep;
}

int count_poles_contour(const ModeSet& modes, const CouplingTable& couplings,
                        const TwistProfile& profile, SolverConfig cfg,
                        double delta, double rho) {
  cfg = resolve_solver_config(cfg, modes, couplings.q0, profile);
  if (rho > 0.0) {
    if (!(rho < cfg.r))
      throw ConfigError("contour radius must stay inside the working disc");
    cfg.contour_rho = rho;
  }
  ResonanceEngine engine(modes, couplings, profile, cfg, delta);
  return winding_number([&](cplx k) { return engine.det_M(k); },
                        cfg.contour_rho, cfg.contour_nodes, 4096);
}

FitReport fit_power_series(const std::vector<double>& deltas,
                           const std::vector<cplx>& ks, cplx c2_reference) {
  if (deltas.size() != ks.size() || deltas.size() < 3)
    throw ConfigError("fit needs >= 3 (delta, k) pairs");
  double s4 = 0, s5 = 0, s6 = 0;
  cplx r2 = 0, r3 = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double d2 = deltas[i] * deltas[i];
    const double d3 = d2 * deltas[i];
    s4 += d2 * d2;
    s5 += d2 * d3;
    s6 += d3 * d3;
    r2 += d2 * ks[i];
    r3 += d3 * ks[i];
  }
  const double det = s4 * s6 - s5 * s5;
  FitReport fit;
  fit.c2 = (s6 * r2 - s5 * r3) / det;
  fit.c3 = (s4 * r3 - s5 * r2) / det;
  // remainder order against the reference quadratic coefficient
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double rem =
        std::abs(ks[i] - c2_reference * deltas[i] * deltas[i]);
    if (rem < 1e-13 * std::max(1e-300, std::abs(ks[i]))) continue;
    const double lx = std::log(deltas[i]), ly = std::log(rem);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++cnt;
  }
  fit.remainder_order =
      cnt >= 2 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx)
               : std::numeric_limits<double>::infinity();
  return fit;
}

SweepResult run_sweep(const ModeSet& modes, const CouplingTable& couplings,
                      const TwistProfile& profile, SolverConfig cfg,
                      const std::vector<double>& deltas) {
  if (deltas.size() < 3)
    throw ConfigError("sweep needs at least 3 delta values");
  for (std::size_t i = 0; i + 1 < deltas.size(); ++i)
    if (!(deltas[i] > 0.0) || !(deltas[i] < deltas[i + 1]))
      throw ConfigError("delta list must be positive and ascending");
  SweepResult sw;
  sw.deltas = deltas;
  for (double d : deltas)
    sw.reports.push_back(find_resonances(modes, couplings, profile, cfg, d));

  const std::size_t nb = sw.reports.front().roots.size();
  for (const auto& rep : sw.reports)
    if (rep.roots.size() != nb)
      throw ConvergenceError(
          "root tracking failed: branch count changed across deltas");
  if (nb == 0) return sw;

  sw.branches.resize(nb);
  // initialize branches from the smallest delta, then match by continuity of
  // k / delta^2
  std::vector<cplx> prev_scaled(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const cplx k0 = sw.reports[0].roots[b].k;
    sw.branches[b].ks.push_back(k0);
    sw.branches[b].predicted_c2 =
        sw.reports[0].roots[b].predicted / (deltas[0] * deltas[0]);
    prev_scaled[b] = k0 / (deltas[0] * deltas[0]);
  }
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    const double d2 = deltas[i] * deltas[i];
    std::vector<char> used(nb, 0);
    for (std::size_t b = 0; b < nb; ++b) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t pick = nb;
      for (std::size_t c = 0; c < nb; ++c) {
        if (used[c]) continue;
        const double dist =
            std::abs(sw.reports[i].roots[c].k / d2 - prev_scaled[b]);
        if (dist < best) {
          best = dist;
          pick = c;
        }
      }
      if (pick == nb)
        throw ConvergenceError("root tracking failed across deltas");
      used[pick] = 1;
      sw.branches[b].ks.push_back(sw.reports[i].roots[pick].k);
      prev_scaled[b] = sw.reports[i].roots[pick].k / d2;
    }
  }
  for (auto& br : sw.branches)
    br.fit = fit_power_series(deltas, br.ks, br.predicted_c2);
  return sw;
}

}  // namespace twistres
