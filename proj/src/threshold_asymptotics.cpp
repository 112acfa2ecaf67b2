#include "twistres/threshold_asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "twistres/errors.hpp"
#include "twistres/kernels1d.hpp"

namespace twistres {

using cplx = std::complex<double>;

namespace {
constexpr double kPi = 3.14159265358979323846;

// J cache keyed by channel eigenvalue (few distinct values per mode set).
class FormCache {
 public:
  FormCache(const TwistProfile& p, double lambda_th)
      : prof_(p), th_(lambda_th) {}
  cplx J(double lambda_q) {
    auto it = j_.find(lambda_q);
    if (it != j_.end()) return it->second;
    const cplx v = resolvent_form(prof_, lambda_q, th_, 0.0);
    j_.emplace(lambda_q, v);
    return v;
  }
  cplx Jprime(double lambda_q) {
    auto it = jp_.find(lambda_q);
    if (it != jp_.end()) return it->second;
    const cplx v = resolvent_form_prime(prof_, lambda_q, th_, 0.0);
    jp_.emplace(lambda_q, v);
    return v;
  }

 private:
  const TwistProfile& prof_;
  double th_;
  std::map<double, cplx> j_, jp_;
};
}  // namespace

MuResult compute_mu(const ModeSet& modes, const CouplingTable& couplings,
                    const TwistProfile& profile) {
  if (couplings.q0 != 0)
    throw ConfigError("compute_mu works at the first threshold; cluster 0");
  if (couplings.m0 != 1)
    throw ConfigError(
        "first transversal eigenvalue is not simple; use compute_upsilon");
  MuResult res;
  res.Q = modes.count();
  const double lambda1 = modes.clusters[0].lambda;
  const double norm_dphi = couplings.dphi_norm_sq[0];
  const double eps_sq = profile.norm_sq();
  const double epsp_sq = profile.deriv_norm_sq();

  if (profile.is_zero()) return res;

  FormCache cache(profile, lambda1);
  double direct = 0.0, accel = norm_dphi * eps_sq;
  for (int p = 1; p < modes.count(); ++p) {
    const double c = modes.lambda(p) - lambda1;
    const double a = couplings.a(p, 0);
    const double C = a * a;
    const double J = cache.J(modes.lambda(p)).real();
    direct += c * C * J;
    accel -= C * cache.Jprime(modes.lambda(p)).real();
    res.terms.push_back({p, modes.lambda(p), C, J});
  }
  res.mu_direct = 0.5 * direct;
  res.mu = 0.5 * accel;

  const double defect = std::max(0.0, couplings.parseval_defect(0));
  res.tail_bound_direct = 0.5 * eps_sq * defect;
  res.tail_bound = 0.5 * epsp_sq * defect / (modes.lambda_next - lambda1);
  return res;
}

UpsilonMatrix compute_upsilon(const ModeSet& modes,
                              const CouplingTable& couplings,
                              const TwistProfile& profile) {
  UpsilonMatrix up;
  up.q0 = couplings.q0;
  up.m0 = couplings.m0;
  const Cluster& cl = modes.clusters[up.q0];
  const double lambda_th = cl.lambda;
  const double eps_sq = profile.norm_sq();

  std::ostringstream basis;
  basis << modes.backend_name() << ":cluster=" << (up.q0 + 1) << ":modes=";
  for (int j = 0; j < cl.size; ++j)
    basis << (j ? "," : "") << (cl.first + j + 1);
  up.basis_id = basis.str();

  Eigen::MatrixXcd M =
      couplings.proj[up.q0].cast<cplx>() * eps_sq;  // within-cluster term
  if (!profile.is_zero()) {
    FormCache cache(profile, lambda_th);
    for (int p = 0; p < modes.count(); ++p) {
      if (modes.cluster_index[p] == up.q0) continue;
      const cplx J = cache.J(modes.lambda(p));
      const double fac = 0.5 * (modes.lambda(p) - lambda_th);
      for (int j = 0; j < cl.size; ++j)
        for (int l = 0; l < cl.size; ++l)
          M(j, l) += fac * couplings.a(p, cl.first + j) *
                     couplings.a(p, cl.first + l) * J;
    }
  }
  up.entries = M;

  up.eigenvalues.resize(up.m0);
  if (up.m0 == 1) {
    up.eigenvalues[0] = M(0, 0);
  } else if (up.m0 == 2) {
    const cplx tr = M(0, 0) + M(1, 1);
    const cplx det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
    const cplx disc = std::sqrt(tr * tr - 4.0 * det);
    up.eigenvalues[0] = 0.5 * (tr - disc);
    up.eigenvalues[1] = 0.5 * (tr + disc);
  } else {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M);
    up.eigenvalues = es.eigenvalues();
  }
  std::sort(up.eigenvalues.data(), up.eigenvalues.data() + up.m0,
            [](cplx l, cplx r) {
              if (l.real() != r.real()) return l.real() < r.real();
              return l.imag() < r.imag();
            });

  double defect = 0.0;
  for (int j = 0; j < up.m0; ++j)
    defect = std::max(defect, couplings.parseval_defect(j));
  up.tail_bound = 0.5 * eps_sq * std::max(0.0, defect);
  return up;
}

double im_mu_open_channels(const ModeSet& modes,
                           const CouplingTable& couplings,
                           const TwistProfile& profile) {
  if (couplings.m0 != 1)
    throw ConfigError("im_mu_open_channels supports only simple thresholds");
  const double lambda_th = modes.clusters[couplings.q0].lambda;
  double im = 0.0;
  for (int c = 0; c < couplings.q0; ++c) {
    const double m = std::sqrt(lambda_th - modes.clusters[c].lambda);
    const double C = couplings.proj[c](0, 0);
    const double fhat = std::abs(fourier_transform(profile, m));
    im -= 0.5 * kPi * m * C * fhat * fhat;
  }
  return im;
}

std::vector<cplx> predicted_resonances(const UpsilonMatrix& upsilon,
                                       double delta) {
  if (!(delta >= 0.0)) throw ConfigError("delta must be nonnegative");
  std::vector<cplx> out;
  out.reserve(upsilon.m0);
  for (int l = 0; l < upsilon.m0; ++l)
    out.push_back(cplx(0.0, -1.0) * upsilon.eigenvalues[l] * delta * delta);
  return out;
}

}  // namespace twistres
