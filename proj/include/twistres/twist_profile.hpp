#pragma once

#include <complex>
#include <limits>
#include <string>
#include <vector>

namespace twistres {

enum class ProfileFamily { Gaussian, Bump, Tabulated, Zero };

std::string to_string(ProfileFamily f);
ProfileFamily profile_family_from_string(const std::string& s);

// Empirical decay certificate: sup over the sampled range of
// max(|eps|,|eps'|) * exp(alpha*<x>) stays bounded and non-growing in the
// tail.  r_max = alpha/2 is the largest usable continuation radius backed by
// this certificate.
struct DecayCertificate {
  bool ok = false;
  double alpha = 0.0;
  double constant = 0.0;     // certified C
  double range = 0.0;        // sampled |x| <= range
  double r_max = 0.0;        // alpha / 2
  double offending_x = 0.0;  // sample where growth was detected (when !ok)
};

// Twist-rate profile eps(x3), C^1 with a closed-form derivative.  `alpha` is
// the claimed exponential decay rate; compactly supported bumps report +inf.
class TwistProfile {
 public:
  double operator()(double x) const { return eval(x); }
  double eval(double x) const;
  double deriv(double x) const;

  ProfileFamily family() const { return family_; }
  double amplitude() const { return amplitude_; }
  double width() const { return width_; }
  double alpha() const { return alpha_; }
  bool is_zero() const { return family_ == ProfileFamily::Zero; }
  bool has_closed_form_fourier() const {
    return family_ == ProfileFamily::Gaussian || family_ == ProfileFamily::Zero;
  }

  double norm_sq() const;        // ||eps||^2
  double deriv_norm_sq() const;  // ||eps'||^2

  // |eps| is negligible (< 1e-18 * amplitude) beyond this radius.
  double support_radius() const;

  // eps == 0.  Degenerate input used by tests and symmetry checks;
  // make_profile rejects amplitude 0.
  static TwistProfile zero();

  friend TwistProfile make_profile(ProfileFamily, double, double, double);
  friend TwistProfile make_tabulated_profile(double, double,
                                             const std::vector<double>&,
                                             double, double);

 private:
  TwistProfile() = default;
  ProfileFamily family_ = ProfileFamily::Zero;
  double amplitude_ = 0.0;
  double width_ = 1.0;
  double alpha_ = std::numeric_limits<double>::infinity();
  // tabulated data on a uniform grid [x0_, x0_ + (n-1)*dx_]
  double x0_ = 0.0, dx_ = 0.0;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

// Families gaussian/bump: eps(0) = amplitude, length scale = width.
// alpha <= 0 selects the family default (10/width for gaussian, +inf for
// bump).
TwistProfile make_profile(ProfileFamily family, double amplitude, double width,
                          double alpha = 0.0);

// Uniform samples on [x0, x0 + (n-1)*dx]; rejected when the sampled slopes
// jump too fast to be consistent with C^1 data.
TwistProfile make_tabulated_profile(double x0, double dx,
                                    const std::vector<double>& values,
                                    double alpha, double width = 0.0);

// Unitary convention: (2*pi)^{-1/2} \int e^{-i xi x} eps(x) dx.
std::complex<double> fourier_transform(const TwistProfile& profile, double xi);

DecayCertificate validate_decay(const TwistProfile& profile,
                                double alpha_required);

}  // namespace twistres
