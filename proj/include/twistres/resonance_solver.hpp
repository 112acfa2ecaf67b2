#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "twistres/cross_section.hpp"
#include "twistres/kernels1d.hpp"
#include "twistres/threshold_asymptotics.hpp"
#include "twistres/twist_profile.hpp"

namespace twistres {

struct SolverConfig {
  double L = 15.0;
  double h3 = 1.0 / 32;
  int Q = 60;            // mode truncation used when building the ModeSet
  double r = 0.0;        // working-disc radius; 0 = auto 0.75*min(r0, alpha/2)
  double N = 0.0;        // weight exponent; 0 = auto inside (r, alpha/2)
  double tol_k = 1e-10;
  double contour_rho = 0.0;  // 0 = auto min(0.5*r0, 0.9*r)
  int contour_nodes = 64;
  int max_newton = 60;
  double gmres_tol = 1e-12;
  int gmres_restart = 60;
  int gmres_maxit = 240;
};

// Fill the spectral-dependent defaults and enforce r < r0, r < N < alpha/2,
// L >= 10*width, and the decay certificate at rate 2N.
SolverConfig resolve_solver_config(SolverConfig cfg, const ModeSet& modes,
                                   int q0_cluster,
                                   const TwistProfile& profile);

// Discretization of T(delta,k) = delta^{-1} eta^{-1} W(delta) eta^{-1} A0(k)
// on the (mode q <= Q) x (axis node) basis, kept in factored form: channel
// kernels are Toeplitz in e^{i k_q h |i-j|} and applied by prefix/suffix
// recurrences in O(n) per channel; the mode mixing is a dense Q x Q product
// with the coupling tables.  Entries are real for k on the imaginary axis at
// the first threshold.  Immutable after assembly.
struct TwistOperator {
  int n = 0, Q = 0;
  double delta = 0.0;
  std::complex<double> k;
  double L = 0.0, h = 0.0;
  Eigen::VectorXd x;                   // axis nodes
  Eigen::VectorXcd etaw;               // eta .* trapezoid weight
  Eigen::VectorXcd la, lb, lc;         // eps/eta, eps'/eta, eps^2/eta
  std::vector<std::complex<double>> kappa;  // per-channel momentum
  std::vector<char> threshold_channel;
  Eigen::MatrixXcd At, Bt;             // a^T, b^T

  long dim() const { return long(n) * Q; }
  void apply(const Eigen::MatrixXcd& X, Eigen::MatrixXcd& out,
             bool adjoint = false) const;
  Eigen::VectorXcd apply_vec(const Eigen::VectorXcd& x,
                             bool adjoint = false) const;
  // operator 2-norm of T by power iteration on T^H T (deterministic start)
  double norm_estimate(int iterations = 25) const;
  Eigen::MatrixXcd to_dense() const;  // test scale only (n*Q <= 4000)
};

TwistOperator assemble_T(const ModeSet& modes, const CouplingTable& couplings,
                         const TwistProfile& profile,
                         const WeightConfig& weights, const Grid1D& grid,
                         double delta, std::complex<double> k);

// Coefficient matrix (axis node x mode) of Phi_{j,delta} =
// -(i/2)(dphi psi_{q0,j} (x) eta^{-1} eps' + delta dphi^2 psi_{q0,j} (x)
// eta^{-1} eps^2), transverse factors expanded through the coupling tables.
Eigen::MatrixXcd assemble_phi(const ModeSet& modes,
                              const CouplingTable& couplings,
                              const TwistProfile& profile,
                              const WeightConfig& weights, const Grid1D& grid,
                              double delta, int j);

// Per-delta evaluation of w_{j,l}(k) = delta <(Id + delta T)^{-1} Phi_j,
// psi_{q0,l} (x) eta> and det M_delta(k) = det(k Id + w(k)).  Keeps warm-start
// solutions per right-hand side; not safe to share across threads.
class ResonanceEngine {
 public:
  ResonanceEngine(const ModeSet& modes, const CouplingTable& couplings,
                  const TwistProfile& profile, const SolverConfig& resolved,
                  double delta);

  Eigen::MatrixXcd w_matrix(std::complex<double> k);
  std::complex<double> det_M(std::complex<double> k);
  Eigen::MatrixXcd M_matrix(std::complex<double> k);  // k Id + w(k)

  // max over probe points of ||delta T||
  double delta_T_norm();

  int m0() const { return m0_; }
  const SolverConfig& config() const { return cfg_; }
  const Grid1D& grid() const { return grid_; }
  const WeightConfig& weights() const { return weights_; }
  long solves() const { return solves_; }

 private:
  const ModeSet& modes_;
  const CouplingTable& couplings_;
  const TwistProfile& profile_;
  SolverConfig cfg_;
  double delta_;
  int q0_, m0_;
  Grid1D grid_;
  WeightConfig weights_;
  std::vector<Eigen::MatrixXcd> phi_;
  std::vector<Eigen::MatrixXcd> warm_;
  std::vector<char> warm_valid_;
  long solves_ = 0;
};

struct ResonanceRoot {
  std::complex<double> k;
  double residual = 0;      // |det M| at the root
  double purity = 0;        // |Re k| / |k|
  std::complex<double> predicted;  // matched -i nu_l delta^2
  double rel_deviation = 0;        // |k - predicted| / |predicted|
  int multiplicity = 1;
  int residue_rank = 1;
};

struct ResonanceReport {
  double delta = 0;
  int m0 = 1;
  std::vector<ResonanceRoot> roots;
  int winding = 0;      // contour count with the origin det-zero removed
  int winding_raw = 0;  // plain argument-principle count on |k| = rho
  int origin_multiplicity = 0;
  double contour_radius = 0;
  double delta_T_norm = 0;
  bool certified = false;  // ||delta T|| < 1/2
  std::vector<std::complex<double>> predictions;
  UpsilonMatrix upsilon;
  std::vector<std::string> log;
};

ResonanceReport find_resonances(const ModeSet& modes,
                                const CouplingTable& couplings,
                                const TwistProfile& profile, SolverConfig cfg,
                                double delta);

// Raw winding of det M_delta over |k| = rho (rho = 0 picks the default).
int count_poles_contour(const ModeSet& modes, const CouplingTable& couplings,
                        const TwistProfile& profile, SolverConfig cfg,
                        double delta, double rho = 0.0);

// Least-squares fit k(delta) ~ c2 delta^2 + c3 delta^3 for one tracked
// branch; remainder order is the log-log slope of |k - c2_ref delta^2|.
struct FitReport {
  std::complex<double> c2, c3;
  double remainder_order = 0;  // +inf when remainders are at rounding level
};

FitReport fit_power_series(const std::vector<double>& deltas,
                           const std::vector<std::complex<double>>& ks,
                           std::complex<double> c2_reference);

struct SweepBranch {
  std::vector<std::complex<double>> ks;  // one per delta
  std::complex<double> predicted_c2;     // -i nu_l
  FitReport fit;
};

struct SweepResult {
  std::vector<double> deltas;
  std::vector<ResonanceReport> reports;
  std::vector<SweepBranch> branches;
};

// find_resonances at every delta (ascending), roots tracked across deltas by
// continuity; throws ConvergenceError when tracking fails.
SweepResult run_sweep(const ModeSet& modes, const CouplingTable& couplings,
                      const TwistProfile& profile, SolverConfig cfg,
                      const std::vector<double>& deltas);

}  // namespace twistres
