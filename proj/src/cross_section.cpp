#include "twistres/cross_section.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "twistres/errors.hpp"
#include "twistres/quadrature.hpp"

namespace twistres {

namespace {

constexpr double kPi = 3.14159265358979323846;

double bessel_j(int m, double x) { return std::cyl_bessel_j(double(m), x); }

double bessel_j_deriv(int m, double x) {
  if (m == 0) return -bessel_j(1, x);
  return 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x));
}

// Zeros of J_m by bracketing scan + bisection; deterministic.
std::vector<double> bessel_zeros(int m, int count) {
  std::vector<double> zeros;
  double x = std::max(1.0, double(m)) + 0.1;
  double f0 = bessel_j(m, x);
  const double step = 0.05;
  while (static_cast<int>(zeros.size()) < count) {
    double x1 = x + step;
    double f1 = bessel_j(m, x1);
    if (f0 == 0.0) {
      zeros.push_back(x);
    } else if (f0 * f1 < 0.0) {
      double lo = x, hi = x1;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = bessel_j(m, mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if (f0 * fm < 0.0)
          hi = mid;
        else
          lo = mid;
      }
      zeros.push_back(0.5 * (lo + hi));
    }
    x = x1;
    f0 = f1;
    if (x > 1e4) throw ConvergenceError("Bessel zero scan ran away");
  }
  return zeros;
}

using SpMat = Eigen::SparseMatrix<double>;

SpMat five_point_laplacian(const Grid2D& g) {
  const int N = static_cast<int>(g.size());
  const double ih2 = 1.0 / (g.h * g.h);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(std::size_t(N) * 5);
  for (int n = 0; n < N; ++n) {
    trip.emplace_back(n, n, 4.0 * ih2);
    const int i = g.ix[n], j = g.iy[n];
    const int nb[4] = {g.node_at(i + 1, j), g.node_at(i - 1, j),
                       g.node_at(i, j + 1), g.node_at(i, j - 1)};
    for (int b : nb)
      if (b >= 0) trip.emplace_back(n, b, -ih2);
  }
  SpMat A(N, N);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

struct EigResult {
  Eigen::VectorXd lambdas;
  Eigen::MatrixXd vecs;
  double max_residual = 0;
  int iterations = 0;
};

// Shift-invert subspace iteration with Rayleigh-Ritz extraction.
EigResult lowest_eigenpairs(const SpMat& A, int Q, double tol = 1e-9,
                            int maxit = 500) {
  const int N = static_cast<int>(A.rows());
  const int m = std::min(N, Q + 20);
  Eigen::SimplicialLDLT<SpMat> ldlt(A);
  if (ldlt.info() != Eigen::Success)
    throw ConvergenceError("sparse factorization of the Laplacian failed");

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(N, m);
  for (int c = 0; c < m; ++c)
    X(std::min<long>(N - 1, (std::int64_t(c) + 1) * N / (m + 1)), c) = 1.0;

  EigResult res;
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(m);
  for (int it = 1; it <= maxit; ++it) {
    Eigen::MatrixXd Y = ldlt.solve(X);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    Eigen::MatrixXd Qm =
        qr.householderQ() * Eigen::MatrixXd::Identity(N, m);
    Eigen::MatrixXd AQ = A * Qm;
    Eigen::MatrixXd H = Qm.transpose() * AQ;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    X = Qm * es.eigenvectors();
    AQ = AQ * es.eigenvectors();
    const Eigen::VectorXd lam = es.eigenvalues();
    double resid = 0.0;
    for (int q = 0; q < std::min(Q, m); ++q)
      resid = std::max(resid,
                       (AQ.col(q) - lam[q] * X.col(q)).norm() / lam[q]);
    res.iterations = it;
    if (resid <= tol && it > 1) {
      res.lambdas = lam;
      res.vecs = X;
      res.max_residual = resid;
      return res;
    }
    if (it == maxit) {
      std::ostringstream msg;
      msg << "eigensolver did not converge in " << maxit
          << " iterations; max relative residual " << resid << " (tol " << tol
          << ")";
      throw ConvergenceError(msg.str());
    }
    prev = lam;
  }
  return res;
}

double default_cluster_tol(double lambda, double user_tol, double h) {
  if (user_tol >= 0.0) return user_tol;
  return std::max(1e-8 * lambda, 5.0 * h * h * lambda);
}

void attach_clusters(ModeSet& ms, double user_tol, double h) {
  ms.clusters = cluster_modes(ms.lambdas, ms.lambda_next, user_tol, h);
  ms.cluster_index.assign(ms.lambdas.size(), 0);
  for (std::size_t c = 0; c < ms.clusters.size(); ++c)
    for (int i = 0; i < ms.clusters[c].size; ++i)
      ms.cluster_index[ms.clusters[c].first + i] = static_cast<int>(c);
  ms.cluster_tol_used = default_cluster_tol(
      ms.lambdas.empty() ? 1.0 : ms.lambdas[0], user_tol, h);
}

}  // namespace

std::vector<Cluster> cluster_modes(const std::vector<double>& lambdas,
                                   double lambda_next, double tol, double h) {
  std::vector<Cluster> out;
  const int Q = static_cast<int>(lambdas.size());
  int start = 0;
  while (start < Q) {
    int end = start;
    while (end + 1 < Q &&
           lambdas[end + 1] - lambdas[end] <
               default_cluster_tol(lambdas[end], tol, h))
      ++end;
    Cluster c;
    c.first = start;
    c.size = end - start + 1;
    c.lambda = std::accumulate(lambdas.begin() + start,
                               lambdas.begin() + end + 1, 0.0) /
               c.size;
    out.push_back(c);
    start = end + 1;
  }
  // gap radii + ambiguity guard
  for (std::size_t c = 0; c < out.size(); ++c) {
    double gap_lo = std::numeric_limits<double>::infinity();
    double gap_hi = std::numeric_limits<double>::infinity();
    if (c > 0) gap_lo = out[c].lambda - out[c - 1].lambda;
    if (c + 1 < out.size())
      gap_hi = out[c + 1].lambda - out[c].lambda;
    else if (lambda_next > 0.0)
      gap_hi = lambda_next - out[c].lambda;
    out[c].r0 = std::sqrt(std::min(std::abs(gap_lo), std::abs(gap_hi)));
    const double tol_here = default_cluster_tol(out[c].lambda, tol, h);
    const double min_gap = std::min(std::abs(gap_lo), std::abs(gap_hi));
    if (std::isfinite(min_gap) && tol_here > 0.5 * min_gap)
      throw ConfigError(
          "cluster_tol is larger than half the smallest inter-cluster gap; "
          "clustering ambiguous");
  }
  return out;
}

std::string ModeSet::backend_name() const {
  if (std::holds_alternative<AnalyticRect>(backend)) return "analytic-rect";
  if (std::holds_alternative<AnalyticDisc>(backend)) return "analytic-disc";
  return "fd";
}

double ModeSet::eval_mode(int q, double x, double y) const {
  if (const auto* r = std::get_if<AnalyticRect>(&backend)) {
    const auto [m, n] = r->mn[q];
    const double u = x - r->center[0] + 0.5 * r->a;
    const double v = y - r->center[1] + 0.5 * r->b;
    return 2.0 / std::sqrt(r->a * r->b) * std::sin(m * kPi * u / r->a) *
           std::sin(n * kPi * v / r->b);
  }
  if (const auto* d = std::get_if<AnalyticDisc>(&backend)) {
    const auto& md = d->modes[q];
    const double dx = x - d->center[0], dy = y - d->center[1];
    const double rr = std::sqrt(dx * dx + dy * dy);
    if (rr >= d->R) return 0.0;
    const double th = std::atan2(dy, dx);
    const double ang = md.sine ? std::sin(md.m * th) : std::cos(md.m * th);
    return md.norm * bessel_j(md.m, md.j * rr / d->R) * ang;
  }
  throw ConfigError("eval_mode requires an analytic backend");
}

double ModeSet::eval_dphi(int q, double x, double y) const {
  if (const auto* r = std::get_if<AnalyticRect>(&backend)) {
    const auto [m, n] = r->mn[q];
    const double u = x - r->center[0] + 0.5 * r->a;
    const double v = y - r->center[1] + 0.5 * r->b;
    const double norm = 2.0 / std::sqrt(r->a * r->b);
    const double km = m * kPi / r->a, kn = n * kPi / r->b;
    const double dpsidx = norm * km * std::cos(km * u) * std::sin(kn * v);
    const double dpsidy = norm * kn * std::sin(km * u) * std::cos(kn * v);
    return x * dpsidy - y * dpsidx;
  }
  if (const auto* d = std::get_if<AnalyticDisc>(&backend)) {
    const auto& md = d->modes[q];
    const double dx = x - d->center[0], dy = y - d->center[1];
    const double rr = std::sqrt(dx * dx + dy * dy);
    if (rr >= d->R || rr == 0.0) return 0.0;
    const double th = std::atan2(dy, dx);
    const double scale = md.j / d->R;
    const double J = bessel_j(md.m, scale * rr);
    const double Jp = scale * bessel_j_deriv(md.m, scale * rr);
    const double ang = md.sine ? std::sin(md.m * th) : std::cos(md.m * th);
    const double dang = md.m * (md.sine ? std::cos(md.m * th)
                                        : -std::sin(md.m * th));
    const double dpsidx =
        md.norm * (Jp * (dx / rr) * ang + J * dang * (-dy / (rr * rr)));
    const double dpsidy =
        md.norm * (Jp * (dy / rr) * ang + J * dang * (dx / (rr * rr)));
    return x * dpsidy - y * dpsidx;
  }
  throw ConfigError("eval_dphi requires an analytic backend");
}

ModeSet build_modes(const Domain2D& domain, double h, int Q,
                    double cluster_tol) {
  if (Q < 1) throw ConfigError("mode count Q must be >= 1");
  Grid2D grid = build_grid(domain, h);
  if (static_cast<int>(grid.size()) < Q + 2)
    throw GeometryError("grid too coarse for the requested mode count");
  SpMat A = five_point_laplacian(grid);
  EigResult eig = lowest_eigenpairs(A, Q + 1);

  ModeSet ms;
  ms.domain = domain;
  ms.lambdas.assign(eig.lambdas.data(), eig.lambdas.data() + Q);
  ms.lambda_next = eig.lambdas[Q];
  ModeSet::FiniteDifference fd;
  fd.grid = std::move(grid);
  fd.vecs = eig.vecs.leftCols(Q) / h;  // h^2 * v.v = 1
  fd.max_residual = eig.max_residual;
  fd.iterations = eig.iterations;
  ms.backend = std::move(fd);
  attach_clusters(ms, cluster_tol, h);
  return ms;
}

ModeSet analytic_rectangle_modes(double a, double b, int Q,
                                 std::array<double, 2> center,
                                 double cluster_tol) {
  if (!(a > 0) || !(b > 0)) throw GeometryError("rectangle sides must be positive");
  if (Q < 1) throw ConfigError("mode count Q must be >= 1");
  struct Entry {
    double lam;
    int m, n;
  };
  std::vector<Entry> entries;
  const int mmax = std::max(8, static_cast<int>(std::ceil(
                                   std::sqrt(double(Q) * 4.0 + 16.0))) +
                                   4);
  for (int m = 1; m <= mmax; ++m)
    for (int n = 1; n <= mmax; ++n)
      entries.push_back(
          {kPi * kPi * (m * m / (a * a) + n * n / (b * b)), m, n});
  std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) {
    if (l.lam != r.lam) return l.lam < r.lam;
    if (l.m != r.m) return l.m < r.m;
    return l.n < r.n;
  });
  if (static_cast<int>(entries.size()) < Q + 1)
    throw ConfigError("rectangle mode enumeration exhausted");

  ModeSet ms;
  ms.domain = Domain2D::rectangle(a, b, center);
  ModeSet::AnalyticRect ar;
  ar.a = a;
  ar.b = b;
  ar.center = center;
  for (int q = 0; q < Q; ++q) {
    ms.lambdas.push_back(entries[q].lam);
    ar.mn.emplace_back(entries[q].m, entries[q].n);
  }
  ms.lambda_next = entries[Q].lam;
  ms.backend = std::move(ar);
  attach_clusters(ms, cluster_tol, 0.0);
  return ms;
}

ModeSet analytic_disc_modes(double R, int Q, std::array<double, 2> center,
                            double cluster_tol) {
  if (!(R > 0)) throw GeometryError("disc radius must be positive");
  if (Q < 1) throw ConfigError("mode count Q must be >= 1");
  struct Entry {
    double lam;
    ModeSet::DiscMode mode;
  };
  std::vector<Entry> entries;
  const int mmax = std::max(12, static_cast<int>(std::ceil(std::sqrt(4.0 * Q))) + 8);
  const int lmax = std::max(6, static_cast<int>(std::ceil(std::sqrt(4.0 * Q))) + 4);
  for (int m = 0; m <= mmax; ++m) {
    const auto zeros = bessel_zeros(m, lmax);
    for (double j : zeros) {
      const double lam = (j / R) * (j / R);
      const double cm = m == 0 ? 2.0 * kPi : kPi;
      const double norm =
          std::sqrt(2.0 / cm) / (R * std::abs(bessel_j(m + 1, j)));
      ModeSet::DiscMode md;
      md.m = m;
      md.j = j;
      md.norm = norm;
      md.sine = false;
      entries.push_back({lam, md});
      if (m >= 1) {
        md.sine = true;
        entries.push_back({lam, md});
      }
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) {
    if (l.lam != r.lam) return l.lam < r.lam;
    if (l.mode.m != r.mode.m) return l.mode.m < r.mode.m;
    return l.mode.sine < r.mode.sine;
  });
  if (static_cast<int>(entries.size()) < Q + 1)
    throw ConfigError("disc mode enumeration exhausted");

  ModeSet ms;
  ms.domain = Domain2D::disc(R, center);
  ModeSet::AnalyticDisc ad;
  ad.R = R;
  ad.center = center;
  for (int q = 0; q < Q; ++q) {
    ms.lambdas.push_back(entries[q].lam);
    ad.modes.push_back(entries[q].mode);
  }
  ms.lambda_next = entries[Q].lam;
  ms.backend = std::move(ad);
  attach_clusters(ms, cluster_tol, 0.0);
  return ms;
}

Eigen::VectorXd angular_derivative(const ModeSet& modes, int q) {
  const auto& fd = modes.fd();
  const Grid2D& g = fd.grid;
  const int N = static_cast<int>(g.size());
  Eigen::VectorXd out(N);
  const auto& v = fd.vecs;
  auto at = [&](int i, int j) {
    const int n = g.node_at(i, j);
    return n >= 0 ? v(n, q) : 0.0;
  };
  for (int n = 0; n < N; ++n) {
    const int i = g.ix[n], j = g.iy[n];
    const double dx = (at(i + 1, j) - at(i - 1, j)) / (2.0 * g.h);
    const double dy = (at(i, j + 1) - at(i, j - 1)) / (2.0 * g.h);
    out[n] = g.x[n] * dy - g.y[n] * dx;
  }
  return out;
}

namespace {

// Mode values and angular derivatives on a quadrature set; a/b by weighted
// Gram products.
struct QuadratureTables {
  Eigen::MatrixXd psi;   // Q x T
  Eigen::MatrixXd dphi;  // Q x T
  Eigen::VectorXd w;     // T
};

QuadratureTables rect_tables(const ModeSet& ms) {
  const auto& r = std::get<ModeSet::AnalyticRect>(ms.backend);
  const int ngl = 128;
  const auto& gl = detail::gauss_legendre(ngl);
  const int Q = ms.count();
  QuadratureTables t;
  const int T = ngl * ngl;
  t.psi.resize(Q, T);
  t.dphi.resize(Q, T);
  t.w.resize(T);
  std::vector<double> xs(ngl), wxs(ngl), ys(ngl), wys(ngl);
  for (int i = 0; i < ngl; ++i) {
    xs[i] = r.center[0] + 0.5 * r.a * gl.x[i];
    wxs[i] = 0.5 * r.a * gl.w[i];
    ys[i] = r.center[1] + 0.5 * r.b * gl.x[i];
    wys[i] = 0.5 * r.b * gl.w[i];
  }
  for (int i = 0; i < ngl; ++i)
    for (int j = 0; j < ngl; ++j) t.w[i * ngl + j] = wxs[i] * wys[j];
  for (int q = 0; q < Q; ++q)
    for (int i = 0; i < ngl; ++i)
      for (int j = 0; j < ngl; ++j) {
        t.psi(q, i * ngl + j) = ms.eval_mode(q, xs[i], ys[j]);
        t.dphi(q, i * ngl + j) = ms.eval_dphi(q, xs[i], ys[j]);
      }
  return t;
}

QuadratureTables disc_tables(const ModeSet& ms) {
  const auto& d = std::get<ModeSet::AnalyticDisc>(ms.backend);
  const int nr = 128, na = 256;
  const auto& gl = detail::gauss_legendre(nr);
  const int Q = ms.count();
  QuadratureTables t;
  const int T = nr * na;
  t.psi.resize(Q, T);
  t.dphi.resize(Q, T);
  t.w.resize(T);
  for (int i = 0; i < nr; ++i) {
    const double rr = 0.5 * d.R * (gl.x[i] + 1.0);
    const double wr = 0.5 * d.R * gl.w[i] * rr;  // polar weight r dr
    for (int j = 0; j < na; ++j) {
      const double th = 2.0 * kPi * j / na;
      const int idx = i * na + j;
      t.w[idx] = wr * 2.0 * kPi / na;
      const double x = d.center[0] + rr * std::cos(th);
      const double y = d.center[1] + rr * std::sin(th);
      for (int q = 0; q < Q; ++q) {
        t.psi(q, idx) = ms.eval_mode(q, x, y);
        t.dphi(q, idx) = ms.eval_dphi(q, x, y);
      }
    }
  }
  return t;
}

void gram_couplings(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& dphi,
                    const Eigen::VectorXd& w, Eigen::MatrixXd& a,
                    Eigen::MatrixXd& b) {
  const Eigen::MatrixXd dw = dphi * w.asDiagonal();
  a = psi * dw.transpose();
  a = 0.5 * (a - a.transpose()).eval();  // exact antisymmetry
  b = -(dphi * w.asDiagonal() * dphi.transpose());
  b = 0.5 * (b + b.transpose()).eval();
}

}  // namespace

double ModeSet::orthonormality_residual() const {
  Eigen::MatrixXd G;
  if (const auto* f = std::get_if<FiniteDifference>(&backend)) {
    G = f->grid.quad_weight() * f->vecs.transpose() * f->vecs;
  } else {
    QuadratureTables t = std::holds_alternative<AnalyticRect>(backend)
                             ? rect_tables(*this)
                             : disc_tables(*this);
    G = t.psi * t.w.asDiagonal() * t.psi.transpose();
  }
  G -= Eigen::MatrixXd::Identity(G.rows(), G.cols());
  return G.cwiseAbs().maxCoeff();
}

CouplingTable coupling_table(const ModeSet& modes, int q0_cluster) {
  if (q0_cluster < 0 ||
      q0_cluster >= static_cast<int>(modes.clusters.size()))
    throw ConfigError("threshold cluster index out of range");
  CouplingTable ct;
  ct.q0 = q0_cluster;
  ct.m0 = modes.clusters[q0_cluster].size;

  if (const auto* f = std::get_if<ModeSet::FiniteDifference>(&modes.backend)) {
    const int Q = modes.count();
    Eigen::MatrixXd dphi(f->grid.size(), Q);
    for (int q = 0; q < Q; ++q) dphi.col(q) = angular_derivative(modes, q);
    const double w = f->grid.quad_weight();
    ct.a = w * f->vecs.transpose() * dphi;
    ct.a = 0.5 * (ct.a - ct.a.transpose()).eval();
    ct.b = -w * dphi.transpose() * dphi;
    ct.b = 0.5 * (ct.b + ct.b.transpose()).eval();
  } else {
    QuadratureTables t =
        std::holds_alternative<ModeSet::AnalyticRect>(modes.backend)
            ? rect_tables(modes)
            : disc_tables(modes);
    Eigen::MatrixXd aT;
    gram_couplings(t.psi, t.dphi, t.w, ct.a, ct.b);
  }

  const Cluster& cl = modes.clusters[q0_cluster];
  ct.dphi_norm_sq.resize(cl.size);
  for (int j = 0; j < cl.size; ++j)
    ct.dphi_norm_sq[j] = -ct.b(cl.first + j, cl.first + j);
  ct.proj.resize(modes.clusters.size());
  for (std::size_t c = 0; c < modes.clusters.size(); ++c) {
    const Cluster& ch = modes.clusters[c];
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(cl.size, cl.size);
    for (int i = 0; i < ch.size; ++i) {
      const int p = ch.first + i;
      for (int j = 0; j < cl.size; ++j)
        for (int l = 0; l < cl.size; ++l)
          C(j, l) += ct.a(p, cl.first + j) * ct.a(p, cl.first + l);
    }
    ct.proj[c] = C;
  }
  return ct;
}

double CouplingTable::parseval_defect(int j) const {
  double sum = 0.0;
  for (const auto& C : proj) sum += C(j, j);
  return dphi_norm_sq[j] - sum;
}

std::string modes_to_csv(const ModeSet& modes) {
  std::ostringstream os;
  os << "index,eigenvalue,cluster\n";
  char buf[64];
  for (int q = 0; q < modes.count(); ++q) {
    std::snprintf(buf, sizeof buf, "%.17g", modes.lambda(q));
    os << (q + 1) << ',' << buf << ',' << (modes.cluster_index[q] + 1) << '\n';
  }
  return os.str();
}

}  // namespace twistres
