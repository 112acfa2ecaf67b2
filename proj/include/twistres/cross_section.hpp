#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

#include "twistres/geometry.hpp"

namespace twistres {

// Group of (numerically) equal eigenvalues.
struct Cluster {
  int first = 0;       // index of the first member mode
  int size = 1;        // multiplicity m0
  double lambda = 0;   // mean eigenvalue
  double r0 = 0;       // min over neighbor clusters of sqrt|gap|
};

// Dirichlet eigenpairs of the cross-section, sorted ascending.  Backends:
// five-point finite differences on a Grid2D, or closed-form modes for
// rectangles (sin products) and discs (Bessel).
class ModeSet {
 public:
  struct AnalyticRect {
    double a = 1, b = 1;
    std::array<double, 2> center{0, 0};
    std::vector<std::pair<int, int>> mn;
  };
  struct DiscMode {
    int m = 0;       // angular index
    bool sine = false;
    double j = 0;    // Bessel zero j_{m,l}
    double norm = 1;
  };
  struct AnalyticDisc {
    double R = 1;
    std::array<double, 2> center{0, 0};
    std::vector<DiscMode> modes;
  };
  struct FiniteDifference {
    Grid2D grid;
    Eigen::MatrixXd vecs;  // column q, scaled so h^2 * v.v = 1
    double max_residual = 0;
    int iterations = 0;
  };

  Domain2D domain;
  std::vector<double> lambdas;
  double lambda_next = 0;  // estimate of the first eigenvalue beyond count()
  std::vector<Cluster> clusters;
  std::vector<int> cluster_index;  // mode -> cluster
  double cluster_tol_used = 0;
  std::variant<AnalyticRect, AnalyticDisc, FiniteDifference> backend;

  int count() const { return static_cast<int>(lambdas.size()); }
  double lambda(int q) const { return lambdas[q]; }
  bool is_analytic() const {
    return !std::holds_alternative<FiniteDifference>(backend);
  }
  const FiniteDifference& fd() const {
    return std::get<FiniteDifference>(backend);
  }
  std::string backend_name() const;

  // closed-form evaluation (analytic backends only)
  double eval_mode(int q, double x, double y) const;
  double eval_dphi(int q, double x, double y) const;  // (x d_y - y d_x) psi_q

  // max |<psi_p, psi_q> - delta_pq| under the backend's inner product
  double orthonormality_residual() const;
};

// Five-point Dirichlet Laplacian, shift-invert subspace iteration for the
// lowest Q pairs.  Deterministic: coordinate unit-vector start basis.
// cluster_tol < 0 selects the default max(1e-8, 5 h^2) * lambda.
ModeSet build_modes(const Domain2D& domain, double h, int Q,
                    double cluster_tol = -1.0);

ModeSet analytic_rectangle_modes(double a, double b, int Q,
                                 std::array<double, 2> center = {0.0, 0.0},
                                 double cluster_tol = -1.0);

ModeSet analytic_disc_modes(double R, int Q,
                            std::array<double, 2> center = {0.0, 0.0},
                            double cluster_tol = -1.0);

// Partition a sorted eigenvalue list into clusters.  tol < 0 selects the
// relative default; h > 0 adds the finite-difference splitting allowance.
std::vector<Cluster> cluster_modes(const std::vector<double>& lambdas,
                                   double lambda_next, double tol,
                                   double h = 0.0);

// Centered-difference angular derivative of mode q as a grid vector
// (finite-difference backend), zero-extended outside the domain.
Eigen::VectorXd angular_derivative(const ModeSet& modes, int q);

// Angular-derivative matrix elements.
//   a(p,q) = <psi_p, dphi psi_q>        (exactly antisymmetric)
//   b(p,q) = <psi_p, dphi^2 psi_q> = -<dphi psi_p, dphi psi_q>
// proj[c](j,l) = sum_{i in cluster c} a(i, g_j) a(i, g_l) for the modes g_j
// of cluster q0; dphi_norm_sq(j) = ||dphi psi_{q0,j}||^2 = -b(g_j, g_j).
struct CouplingTable {
  int q0 = 0;  // cluster index (0-based)
  int m0 = 1;
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  std::vector<Eigen::MatrixXd> proj;
  Eigen::VectorXd dphi_norm_sq;

  // ||dphi psi_{q0,j}||^2 - sum over all computed clusters of proj[c](j,j);
  // nonnegative by Bessel's inequality.
  double parseval_defect(int j) const;
};

CouplingTable coupling_table(const ModeSet& modes, int q0_cluster);

// CSV export: index, eigenvalue, cluster id.
std::string modes_to_csv(const ModeSet& modes);

}  // namespace twistres
