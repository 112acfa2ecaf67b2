#pragma once

#include <cmath>
#include <map>
#include <utility>
#include <vector>

namespace twistres::detail {

struct GlRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

// Gauss-Legendre nodes/weights on [-1,1], Newton on the Legendre recurrence.
inline const GlRule& gauss_legendre(int n) {
  static std::map<int, GlRule> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GlRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= n; ++j) {
      double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    rule.x[i] = -x;
    rule.x[n - 1 - i] = x;
    rule.w[i] = rule.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

// Composite Gauss-Legendre over [a,b] split into `panels` equal panels.
template <class F>
auto panel_integrate(F&& f, double a, double b, int panels, int order = 12)
    -> decltype(f(a)) {
  const GlRule& gl = gauss_legendre(order);
  using R = decltype(f(a));
  R acc{};
  const double hp = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * hp;
    for (int g = 0; g < order; ++g)
      acc += (0.5 * hp * gl.w[g]) * f(mid + 0.5 * hp * gl.x[g]);
  }
  return acc;
}

}  // namespace twistres::detail
