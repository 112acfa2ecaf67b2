#include "twistres/validate.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "twistres/errors.hpp"
#include "twistres/kernels1d.hpp"
#include "twistres/threshold_asymptotics.hpp"

namespace twistres {

using cplx = std::complex<double>;

namespace {
constexpr double kPi = 3.14159265358979323846;
const cplx kI(0.0, 1.0);
}  // namespace

std::vector<PropertyCheck> run_validation(const RunConfig& cfg) {
  std::vector<PropertyCheck> checks;
  const TwistProfile profile = cfg.profile.build();
  const ModeSet modes = build_configured_modes(cfg);
  const int q0 = cfg.q0 - 1;
  const CouplingTable couplings = coupling_table(modes, q0);
  const bool analytic = modes.is_analytic();
  const double h = cfg.domain.h;

  {
    PropertyCheck c;
    c.name = "orthonormality";
    c.tolerance = analytic ? 1e-8 : 1e-6;
    c.measured = modes.orthonormality_residual();
    c.pass = c.measured <= c.tolerance;
    checks.push_back(c);
  }
  {
    PropertyCheck c;
    c.name = "coupling-antisymmetry";
    c.tolerance = analytic ? 1e-8 : 10.0 * h * h;
    // a is stored antisymmetrized; measure the raw defect through b's
    // symmetry and the diagonal of a
    c.measured = (couplings.a + couplings.a.transpose()).cwiseAbs().maxCoeff();
    for (int q = 0; q < modes.count(); ++q)
      c.measured = std::max(c.measured, std::abs(couplings.a(q, q)));
    c.pass = c.measured <= c.tolerance;
    checks.push_back(c);
  }
  {
    PropertyCheck c;
    c.name = "parseval-monotonicity";
    c.tolerance = 1e-10 * std::max(1.0, couplings.dphi_norm_sq.maxCoeff());
    double worst = 0.0;
    for (int j = 0; j < couplings.m0; ++j) {
      double partial = 0.0;
      for (const auto& C : couplings.proj) {
        const double d = C(j, j);
        worst = std::max(worst, -d);  // increments must be >= 0
        partial += d;
      }
      worst = std::max(worst, partial - couplings.dphi_norm_sq[j]);
    }
    c.measured = worst;
    c.pass = c.measured <= c.tolerance;
    checks.push_back(c);
  }
  {
    PropertyCheck c;
    c.name = "psd-projected-blocks";
    c.tolerance = 1e-12 * std::max(1.0, couplings.dphi_norm_sq.maxCoeff());
    double worst = 0.0;
    for (const auto& C : couplings.proj) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
      worst = std::max(worst, -es.eigenvalues().minCoeff());
    }
    c.measured = worst;
    c.pass = c.measured <= c.tolerance;
    checks.push_back(c);
  }
  if (q0 == 0) {
    // w(i alpha) purely imaginary at the first threshold
    PropertyCheck c;
    c.name = "w-imaginary-axis";
    c.tolerance = 1e-10;
    const double delta = cfg.deltas.empty() ? 0.02 : cfg.deltas.front();
    SolverConfig scfg =
        resolve_solver_config(cfg.solver, modes, q0, profile);
    ResonanceEngine engine(modes, couplings, profile, scfg, delta);
    const Eigen::MatrixXcd w = engine.w_matrix(cplx(0.0, 1e-3));
    const double scale = w.cwiseAbs().maxCoeff();
    c.measured = scale > 0.0 ? w.real().cwiseAbs().maxCoeff() / scale : 0.0;
    c.pass = c.measured <= c.tolerance;
    std::ostringstream os;
    os << "|Re w|/|w| at k = 1e-3 i";
    c.detail = os.str();
    checks.push_back(c);
  }
  {
    // Cauchy integral of J for a decaying channel reproduces the center
    PropertyCheck c;
    c.name = "analyticity-resolvent-form";
    c.tolerance = 1e-8;
    if (profile.is_zero()) {
      c.measured = 0.0;
      c.pass = true;
    } else {
      const double lam_th = modes.clusters[q0].lambda;
      double lam_q = -1.0;
      for (int p = 0; p < modes.count(); ++p)
        if (modes.cluster_index[p] != q0 && modes.lambda(p) > lam_th) {
          lam_q = modes.lambda(p);
          break;
        }
      if (lam_q < 0) lam_q = lam_th + 1.0;
      const double rc = 0.2 * std::sqrt(lam_q - lam_th);
      const int nn = 32;
      cplx acc = 0.0;
      for (int j = 0; j < nn; ++j) {
        const cplx kj = rc * std::exp(kI * (2.0 * kPi * j / nn));
        acc += resolvent_form(profile, lam_q, lam_th, kj) / double(nn);
      }
      const cplx center = resolvent_form(profile, lam_q, lam_th, 0.0);
      c.measured = std::abs(acc - center) / std::abs(center);
      c.pass = c.measured <= c.tolerance;
    }
    checks.push_back(c);
  }
  {
    // Cauchy integral of det M over |k| = rho reproduces det M(0)
    PropertyCheck c;
    c.name = "analyticity-det";
    c.tolerance = 1e-6;
    const double delta = cfg.deltas.empty() ? 0.02 : cfg.deltas.front();
    SolverConfig scfg =
        resolve_solver_config(cfg.solver, modes, q0, profile);
    ResonanceEngine engine(modes, couplings, profile, scfg, delta);
    const double rc = 0.5 * scfg.contour_rho;
    const int nn = 32;
    cplx acc = 0.0;
    double circle_max = 0.0;
    for (int j = 0; j < nn; ++j) {
      const cplx kj = rc * std::exp(kI * (2.0 * kPi * j / nn));
      const cplx v = engine.det_M(kj);
      circle_max = std::max(circle_max, std::abs(v));
      acc += v / double(nn);
    }
    const cplx center = engine.det_M(0.0);
    const double scale =
        std::max(std::abs(center), 1e-14 * std::max(circle_max, 1e-300));
    c.measured = std::abs(acc - center) / scale;
    c.pass = c.measured <= c.tolerance;
    checks.push_back(c);
  }
  return checks;
}

bool all_passed(const std::vector<PropertyCheck>& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

}  // namespace twistres
