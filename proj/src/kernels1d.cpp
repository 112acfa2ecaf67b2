#include "twistres/kernels1d.hpp"

#include <cmath>

#include "twistres/errors.hpp"
#include "twistres/quadrature.hpp"

namespace twistres {

using cplx = std::complex<double>;

Grid1D Grid1D::make(double L, double h) {
  if (!(L > 0.0) || !(h > 0.0) || h >= L)
    throw ConfigError("axis grid needs 0 < h3 < L");
  Grid1D g;
  const int half = std::max(1, static_cast<int>(std::lround(L / h)));
  const int n = 2 * half + 1;
  g.L = L;
  g.h = L / half;  // snap so the grid is symmetric about 0
  g.x.resize(n);
  g.w.resize(n);
  for (int i = 0; i < n; ++i) {
    g.x[i] = (i - half) * g.h;
    g.w[i] = (i == 0 || i == n - 1) ? 0.5 * g.h : g.h;
  }
  return g;
}

void check_weight_window(double N, double r, double alpha) {
  if (!(N > r))
    throw ConfigError("weight exponent violates N > r (N = " +
                      std::to_string(N) + ", r = " + std::to_string(r) + ")");
  if (!(N < alpha / 2.0))
    throw ConfigError("weight exponent violates N < alpha/2 (N = " +
                      std::to_string(N) +
                      ", alpha/2 = " + std::to_string(alpha / 2.0) + ")");
}

cplx branch_momentum(double lambda_q, double lambda_th, cplx k) {
  const double c = lambda_q - lambda_th;
  if (c == 0.0) return k;
  if (std::norm(k) >= std::abs(c))
    throw ConfigError("momentum branch violation: |k| >= sqrt(|lambda_q - "
                      "lambda_th|) leaves the analyticity disc");
  if (c > 0.0) return cplx(0.0, 1.0) * std::sqrt(cplx(c, 0.0) - k * k);
  return std::sqrt(k * k + cplx(-c, 0.0));
}

namespace {

// I(f, g) = \int f(x) [ \int_{y<x} e^{-gamma (x-y)} g(y) dy ] dx on [-R, R].
// Cumulative panel recurrence keeps every exponential evaluated on a local
// offset, so decaying channels never overflow and oscillatory ones stay
// accurate.
template <class F, class G>
cplx ordered_exponential_form(F&& f, G&& g, cplx gamma, double R,
                              double panel_width) {
  const auto& gl = detail::gauss_legendre(8);
  const int M = std::max(8, static_cast<int>(std::ceil(2.0 * R / panel_width)));
  const double hp = 2.0 * R / M;
  cplx P = 0.0;  // P(s_i) = int_{y < s_i} e^{-gamma (s_i - y)} g(y) dy
  const cplx E = std::exp(-gamma * hp);
  cplx acc = 0.0;
  for (int p = 0; p < M; ++p) {
    const double s0 = -R + p * hp;
    // outer nodes and the partial cumulative inside this panel
    for (int t = 0; t < 8; ++t) {
      const double xt = s0 + 0.5 * hp * (gl.x[t] + 1.0);
      cplx partial = 0.0;  // int_{s0}^{xt} e^{-gamma (xt - y)} g(y) dy
      const double hl = xt - s0;
      if (hl > 0.0) {
        for (int u = 0; u < 8; ++u) {
          const double yu = s0 + 0.5 * hl * (gl.x[u] + 1.0);
          partial += (0.5 * hl * gl.w[u]) * std::exp(-gamma * (xt - yu)) * g(yu);
        }
      }
      const cplx C = std::exp(-gamma * (xt - s0)) * P + partial;
      acc += (0.5 * hp * gl.w[t]) * f(xt) * C;
    }
    // advance the cumulative to the right edge
    cplx Lp = 0.0;
    const double s1 = s0 + hp;
    for (int u = 0; u < 8; ++u) {
      const double yu = s0 + 0.5 * hp * (gl.x[u] + 1.0);
      Lp += (0.5 * hp * gl.w[u]) * std::exp(-gamma * (s1 - yu)) * g(yu);
    }
    P = E * P + Lp;
  }
  return acc;
}

template <class F>
cplx quadratic_form(F&& sample, const TwistProfile& profile, double lambda_q,
                    double lambda_th, cplx k) {
  const double c = lambda_q - lambda_th;
  if (c == 0.0)
    throw ConfigError("resolvent form needs lambda_q != lambda_th");
  if (profile.is_zero()) return 0.0;
  const cplx kq = branch_momentum(lambda_q, lambda_th, k);
  const cplx gamma = cplx(0.0, -1.0) * kq;  // e^{i kq d} = e^{-gamma d}
  const double R = profile.support_radius();
  const double pw =
      std::min({0.5 * profile.width(), 1.5 / (1.0 + std::abs(kq)), 0.5});
  // <.,.> linear in the first slot; everything sampled is real anyway.
  const cplx ordered =
      ordered_exponential_form(sample, sample, gamma, R, pw);
  return cplx(0.0, 1.0) / (2.0 * kq) * (2.0 * ordered);
}

}  // namespace

cplx resolvent_form(const TwistProfile& profile, double lambda_q,
                    double lambda_th, cplx k) {
  return quadratic_form([&](double x) { return profile.eval(x); }, profile,
                        lambda_q, lambda_th, k);
}

cplx resolvent_form_prime(const TwistProfile& profile, double lambda_q,
                          double lambda_th, cplx k) {
  return quadratic_form([&](double x) { return profile.deriv(x); }, profile,
                        lambda_q, lambda_th, k);
}

cplx regularized_threshold_core(cplx k, double d) {
  const cplx kd = k * d;
  if (std::abs(kd) < 1e-4) {
    // i(e^{ikd}-1)/(2k) = -d/2 - i k d^2/4 + k^2 d^3/12 + i k^3 d^4/48 + ...
    const cplx ikd(-kd.imag(), kd.real());
    return -0.5 * d *
           (1.0 + ikd * (0.5 + ikd * (1.0 / 6.0 + ikd / 24.0)));
  }
  return cplx(0.0, 1.0) * (std::exp(cplx(0.0, 1.0) * kd) - 1.0) / (2.0 * k);
}

Eigen::MatrixXcd weighted_kernel_matrix(KernelKind kind, double lambda_q,
                                        double lambda_th, cplx k,
                                        const Grid1D& grid,
                                        const WeightConfig& weights) {
  const int n = grid.size();
  Eigen::MatrixXcd M(n, n);
  Eigen::VectorXd eta(n);
  for (int i = 0; i < n; ++i) eta[i] = weights.eta(grid.x[i]);
  const cplx kq = branch_momentum(lambda_q, lambda_th, k);
  const cplx iu(0.0, 1.0);
  switch (kind) {
    case KernelKind::Resolvent: {
      const cplx pref = iu / (2.0 * kq);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double d = std::abs(grid.x[i] - grid.x[j]);
          M(i, j) = eta[i] * pref * std::exp(iu * kq * d) * eta[j] * grid.w[j];
        }
      break;
    }
    case KernelKind::ThresholdRegularized: {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double d = std::abs(grid.x[i] - grid.x[j]);
          M(i, j) =
              eta[i] * regularized_threshold_core(k, d) * eta[j] * grid.w[j];
        }
      break;
    }
    case KernelKind::DerivativeResolvent: {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double diff = grid.x[i] - grid.x[j];
          const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
          M(i, j) = -0.5 * sgn * std::exp(iu * kq * std::abs(diff)) * eta[j] *
                    grid.w[j];
        }
      break;
    }
  }
  if (!M.allFinite())
    throw ConfigError("kernel matrix overflowed; weight exponent too large");
  return M;
}

}  // namespace twistres
