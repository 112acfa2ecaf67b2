#include "twistres/twist_profile.hpp"

#include <algorithm>
#include <cmath>

#include "twistres/errors.hpp"
#include "twistres/quadrature.hpp"

namespace twistres {

namespace {
constexpr double kPi = 3.14159265358979323846;

double angle_bracket(double x) { return std::sqrt(1.0 + x * x); }
}  // namespace

std::string to_string(ProfileFamily f) {
  switch (f) {
    case ProfileFamily::Gaussian: return "gaussian";
    case ProfileFamily::Bump: return "bump";
    case ProfileFamily::Tabulated: return "tabulated";
    case ProfileFamily::Zero: return "zero";
  }
  return "unknown";
}

ProfileFamily profile_family_from_string(const std::string& s) {
  if (s == "gaussian") return ProfileFamily::Gaussian;
  if (s == "bump") return ProfileFamily::Bump;
  if (s == "tabulated") return ProfileFamily::Tabulated;
  if (s == "zero") return ProfileFamily::Zero;
  throw ConfigError("unknown profile family '" + s + "'");
}

double TwistProfile::eval(double x) const {
  switch (family_) {
    case ProfileFamily::Gaussian: {
      const double u = x / width_;
      return amplitude_ * std::exp(-u * u);
    }
    case ProfileFamily::Bump: {
      const double u = x / width_;
      if (std::abs(u) >= 1.0) return 0.0;
      return amplitude_ * std::exp(1.0 - 1.0 / (1.0 - u * u));
    }
    case ProfileFamily::Tabulated: {
      const double t = (x - x0_) / dx_;
      if (t <= 0.0 || t >= double(values_.size() - 1)) return 0.0;
      const int i = static_cast<int>(t);
      const double s = t - i;
      const double v0 = values_[i], v1 = values_[i + 1];
      const double m0 = slopes_[i] * dx_, m1 = slopes_[i + 1] * dx_;
      const double s2 = s * s, s3 = s2 * s;
      return (2 * s3 - 3 * s2 + 1) * v0 + (s3 - 2 * s2 + s) * m0 +
             (-2 * s3 + 3 * s2) * v1 + (s3 - s2) * m1;
    }
    case ProfileFamily::Zero: return 0.0;
  }
  return 0.0;
}

double TwistProfile::deriv(double x) const {
  switch (family_) {
    case ProfileFamily::Gaussian: {
      const double u = x / width_;
      return amplitude_ * (-2.0 * u / width_) * std::exp(-u * u);
    }
    case ProfileFamily::Bump: {
      const double u = x / width_;
      if (std::abs(u) >= 1.0) return 0.0;
      const double d = 1.0 - u * u;
      return amplitude_ * std::exp(1.0 - 1.0 / d) * (-2.0 * u / (width_ * d * d));
    }
    case ProfileFamily::Tabulated: {
      const double t = (x - x0_) / dx_;
      if (t <= 0.0 || t >= double(values_.size() - 1)) return 0.0;
      const int i = static_cast<int>(t);
      const double s = t - i;
      const double v0 = values_[i], v1 = values_[i + 1];
      const double m0 = slopes_[i] * dx_, m1 = slopes_[i + 1] * dx_;
      const double s2 = s * s;
      return ((6 * s2 - 6 * s) * v0 + (3 * s2 - 4 * s + 1) * m0 +
              (-6 * s2 + 6 * s) * v1 + (3 * s2 - 2 * s) * m1) /
             dx_;
    }
    case ProfileFamily::Zero: return 0.0;
  }
  return 0.0;
}

double TwistProfile::support_radius() const {
  switch (family_) {
    case ProfileFamily::Gaussian: return 7.0 * width_;  // exp(-49) ~ 5e-22
    case ProfileFamily::Bump: return width_;
    case ProfileFamily::Tabulated:
      return std::max(std::abs(x0_), std::abs(x0_ + dx_ * (values_.size() - 1)));
    case ProfileFamily::Zero: return 1.0;
  }
  return 1.0;
}

double TwistProfile::norm_sq() const {
  if (family_ == ProfileFamily::Zero) return 0.0;
  if (family_ == ProfileFamily::Gaussian)
    return amplitude_ * amplitude_ * width_ * std::sqrt(kPi / 2.0);
  const double R = support_radius();
  return detail::panel_integrate(
      [this](double x) {
        const double v = eval(x);
        return v * v;
      },
      -R, R, std::max(64, int(R / (0.25 * width_))), 12);
}

double TwistProfile::deriv_norm_sq() const {
  if (family_ == ProfileFamily::Zero) return 0.0;
  if (family_ == ProfileFamily::Gaussian)
    return amplitude_ * amplitude_ / width_ * std::sqrt(kPi / 2.0);
  const double R = support_radius();
  return detail::panel_integrate(
      [this](double x) {
        const double v = deriv(x);
        return v * v;
      },
      -R, R, std::max(64, int(R / (0.25 * width_))), 12);
}

TwistProfile TwistProfile::zero() {
  TwistProfile p;
  p.family_ = ProfileFamily::Zero;
  return p;
}

TwistProfile make_profile(ProfileFamily family, double amplitude, double width,
                          double alpha) {
  if (family == ProfileFamily::Zero)
    throw ConfigError("zero profile is not constructible via make_profile; "
                      "use TwistProfile::zero()");
  if (family == ProfileFamily::Tabulated)
    throw ConfigError("tabulated profiles require make_tabulated_profile");
  if (amplitude == 0.0) throw ConfigError("profile amplitude must be nonzero");
  if (!(width > 0.0)) throw ConfigError("profile width must be positive");
  TwistProfile p;
  p.family_ = family;
  p.amplitude_ = amplitude;
  p.width_ = width;
  if (alpha > 0.0)
    p.alpha_ = alpha;
  else
    p.alpha_ = family == ProfileFamily::Gaussian
                   ? 10.0 / width
                   : std::numeric_limits<double>::infinity();
  return p;
}

TwistProfile make_tabulated_profile(double x0, double dx,
                                    const std::vector<double>& values,
                                    double alpha, double width) {
  if (values.size() < 8) throw ConfigError("tabulated profile needs >= 8 samples");
  if (!(dx > 0.0)) throw ConfigError("tabulated profile needs dx > 0");
  if (!(alpha > 0.0)) throw ConfigError("tabulated profile needs a decay rate");
  TwistProfile p;
  p.family_ = ProfileFamily::Tabulated;
  p.x0_ = x0;
  p.dx_ = dx;
  p.values_ = values;
  const int n = static_cast<int>(values.size());
  p.slopes_.resize(n);
  for (int i = 0; i < n; ++i) {
    if (i == 0)
      p.slopes_[i] = (values[1] - values[0]) / dx;
    else if (i == n - 1)
      p.slopes_[i] = (values[n - 1] - values[n - 2]) / dx;
    else
      p.slopes_[i] = (values[i + 1] - values[i - 1]) / (2.0 * dx);
  }
  double smax = 0.0, vmax = 0.0;
  for (int i = 0; i < n; ++i) {
    smax = std::max(smax, std::abs(p.slopes_[i]));
    vmax = std::max(vmax, std::abs(values[i]));
  }
  if (vmax == 0.0) throw ConfigError("tabulated profile is identically zero");
  // C^1 check: within one cell a resolved slope cannot move by a large
  // fraction of the global slope scale.
  for (int i = 0; i + 1 < n; ++i) {
    if (std::abs(p.slopes_[i + 1] - p.slopes_[i]) > 0.75 * smax &&
        smax > 0.0) {
      throw ConfigError("tabulated profile rejected: slope jump near x = " +
                        std::to_string(x0 + i * dx) +
                        " is inconsistent with C^1 data");
    }
  }
  p.amplitude_ = vmax;
  p.width_ = width > 0.0 ? width : 0.1 * (dx * (n - 1));
  p.alpha_ = alpha;
  return p;
}

std::complex<double> fourier_transform(const TwistProfile& profile, double xi) {
  using cplx = std::complex<double>;
  if (profile.is_zero()) return 0.0;
  if (profile.family() == ProfileFamily::Gaussian) {
    const double w = profile.width();
    return cplx(profile.amplitude() * w / std::sqrt(2.0) *
                    std::exp(-w * w * xi * xi / 4.0),
                0.0);
  }
  const double R = profile.support_radius();
  const double scale = std::min(0.25 * profile.width(),
                                kPi / (4.0 * (std::abs(xi) + 1.0)));
  const int panels = std::max(32, int(2.0 * R / scale));
  cplx integral = detail::panel_integrate(
      [&](double x) {
        return profile.eval(x) * std::exp(cplx(0.0, -xi * x));
      },
      -R, R, panels, 12);
  return integral / std::sqrt(2.0 * kPi);
}

DecayCertificate validate_decay(const TwistProfile& profile,
                                double alpha_required) {
  if (!(alpha_required > 0.0))
    throw ConfigError("validate_decay requires alpha > 0");
  DecayCertificate cert;
  cert.alpha = alpha_required;
  cert.r_max = alpha_required / 2.0;
  const double X = std::max(20.0 * profile.width(), 4.0 / alpha_required);
  cert.range = X;
  const int n = 4000;
  std::vector<double> envelope(n + 1);
  double cmax = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = X * i / n;
    const double e = std::max(
        std::max(std::abs(profile.eval(x)), std::abs(profile.eval(-x))),
        std::max(std::abs(profile.deriv(x)), std::abs(profile.deriv(-x))));
    envelope[i] = e * std::exp(alpha_required * angle_bracket(x));
    cmax = std::max(cmax, envelope[i]);
  }
  cert.constant = cmax;
  // Growth of the weighted envelope over the sampled tail certifies failure.
  double tail_min = envelope[n / 2];
  for (int i = n / 2; i <= n; ++i) tail_min = std::min(tail_min, envelope[i]);
  const bool growing = envelope[n] > 1.0001 * tail_min &&
                       envelope[n] >= envelope[3 * n / 4];
  if (growing && cmax > 0.0) {
    cert.ok = false;
    cert.offending_x = X;
  } else {
    cert.ok = true;
  }
  return cert;
}

}  // namespace twistres
