#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "twistres/cross_section.hpp"
#include "twistres/twist_profile.hpp"

namespace twistres {

// Second-order coefficient at a simple first threshold,
//   mu = 1/2 sum_{q>=2} (lambda_q - lambda_1) C_q J_q(0),
// reported through the accelerated series
//   mu = 1/2 ||dphi psi_1||^2 ||eps||^2
//        - 1/2 sum_{q<=Q} C_q <eps', (D^2 + lambda_q - lambda_1)^{-1} eps'>,
// whose truncation tail is O(1/lambda_Q).  Both values and rigorous tail
// bounds are returned.
struct MuResult {
  double mu = 0;           // accelerated value (reported)
  double mu_direct = 0;    // direct series, underestimates
  double tail_bound = 0;   // accelerated-series tail
  double tail_bound_direct = 0;
  int Q = 0;
  struct Term {
    int mode;        // 0-based mode index
    double lambda;
    double coupling;  // a(mode, psi_1)^2
    double J;         // <eps, R eps> at k = 0
  };
  std::vector<Term> terms;
};

MuResult compute_mu(const ModeSet& modes, const CouplingTable& couplings,
                    const TwistProfile& profile);

// m0 x m0 coefficient matrix at cluster q0; channels below the threshold use
// the continued (complex) resolvent form.
struct UpsilonMatrix {
  int q0 = 0;  // 0-based cluster index
  int m0 = 1;
  Eigen::MatrixXcd entries;
  Eigen::VectorXcd eigenvalues;  // nu_l sorted by (Re, Im)
  double tail_bound = 0;
  std::string basis_id;  // cluster basis provenance
};

UpsilonMatrix compute_upsilon(const ModeSet& modes,
                              const CouplingTable& couplings,
                              const TwistProfile& profile);

// Imaginary part of the 1x1 coefficient from the open channels below a
// simple upper threshold, computed from Fourier transforms alone:
//   Im mu_{q0} = -(pi/2) sum_{q<q0} m_q ||pi_q dphi psi_{q0}||^2
//                |eps_hat(m_q)|^2,       m_q = sqrt(lambda_q0 - lambda_q).
// The per-channel constant (pi/2) m_q comes from the continued kernel under
// the unitary Fourier convention.
double im_mu_open_channels(const ModeSet& modes,
                           const CouplingTable& couplings,
                           const TwistProfile& profile);

// Leading pole predictions {-i nu_l delta^2}.
std::vector<std::complex<double>> predicted_resonances(
    const UpsilonMatrix& upsilon, double delta);

}  // namespace twistres
