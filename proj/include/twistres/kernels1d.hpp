#pragma once

#include <Eigen/Dense>
#include <complex>

#include "twistres/twist_profile.hpp"

namespace twistres {

// Uniform symmetric axis grid on [-L, L] with trapezoid weights.
struct Grid1D {
  double L = 15.0;
  double h = 1.0 / 32;
  Eigen::VectorXd x;
  Eigen::VectorXd w;
  int size() const { return static_cast<int>(x.size()); }
  static Grid1D make(double L, double h);
};

// Exponential weight eta(x) = exp(-N <x>), <x> = sqrt(1 + x^2).
// The usable window is r < N < alpha/2 (working-disc radius r, profile decay
// rate alpha); enforced by check_weight_window.
struct WeightConfig {
  double N = 4.0;
  double eta(double x) const { return std::exp(-N * std::sqrt(1.0 + x * x)); }
};

void check_weight_window(double N, double r, double alpha);

// Momentum of channel lambda_q at threshold lambda_th, continued in k from
// the physical quadrant.  Kernel of the channel resolvent is
// (i/2k_q) e^{i k_q |x-y|} with k_q = branch_momentum(...):
//   lambda_q > lambda_th : k_q = i sqrt(c - k^2), c = lambda_q - lambda_th
//                          (decaying channel, principal square root)
//   lambda_q < lambda_th : k_q = sqrt(k^2 + m^2), m^2 = lambda_th - lambda_q,
//                          continued from C^{++}, k_q(0) = +m
//   lambda_q = lambda_th : k_q = k (the threshold channel itself).
// Analytic for |k| < sqrt(|lambda_q - lambda_th|).
std::complex<double> branch_momentum(double lambda_q, double lambda_th,
                                     std::complex<double> k);

// J_q(k) = <eps, (D3^2 + lambda_q - lambda_th - k^2)^{-1} eps>, evaluated by
// panel Gauss-Legendre quadrature with the exponential kept paired to node
// offsets (no overflow, no |x-y| kink in any integrand).
std::complex<double> resolvent_form(const TwistProfile& profile,
                                    double lambda_q, double lambda_th,
                                    std::complex<double> k);

// Same form with eps'; shares the engine but not the identity
// <eps',R eps'> = ||eps||^2 - c <eps,R eps>, which stays an independent check.
std::complex<double> resolvent_form_prime(const TwistProfile& profile,
                                          double lambda_q, double lambda_th,
                                          std::complex<double> k);

enum class KernelKind {
  Resolvent,             // (i)  eta(x) (i/2k_q) e^{i k_q|x-y|} eta(y)
  ThresholdRegularized,  // (ii) i eta(x) (e^{ik|x-y|}-1)/(2k) eta(y)
  DerivativeResolvent    // (iii) -1/2 sign(x-y) e^{i k_q|x-y|} eta(y)
};

// Dense kernel matrix on the grid, trapezoid weights folded into the columns
// so that matrix * samples approximates the integral operator.  Kind (ii)
// switches to a series for |k * (x-y)| < 1e-4 and equals
// -eta(x)|x-y|eta(y)/2 at k = 0.
Eigen::MatrixXcd weighted_kernel_matrix(KernelKind kind, double lambda_q,
                                        double lambda_th,
                                        std::complex<double> k,
                                        const Grid1D& grid,
                                        const WeightConfig& weights);

// Series-safe scalar core of kind (ii): i (e^{ikd} - 1) / (2k), d >= 0.
std::complex<double> regularized_threshold_core(std::complex<double> k,
                                                double d);

}  // namespace twistres
