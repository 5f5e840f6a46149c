#pragma once

// Posterior Fisher information for a random azimuth seen through a rank-one
// two-way array response.  The transmit covariance enters through three
// prior-averaged matrices
//   A1 = int (||db||^2 a a^H + N_r da da^H) p(theta) dtheta
//   A2 = N_r int da a^H p(theta) dtheta
//   A3 = N_r int a a^H p(theta) dtheta
// and the scalar observation term
//   g(R) = tr(A1 R) - |tr(A2 R)|^2 / tr(A3 R),
// which combines with the prior score energy into the periodic bound
//   pcrb = 2 - 2 (1 + [F^-1]_11)^(-1/2),
//   [F^-1]_11 = 1 / (prior_fisher + (2 |alpha|^2 L / sigma^2) g(R)).

#include <complex>

#include <Eigen/Dense>

#include "isac/geometry.hpp"
#include "isac/prior.hpp"
#include "isac/quadrature.hpp"

namespace isac {

struct SensingMatrices {
    Eigen::MatrixXcd a1;  // num_tx x num_tx, Hermitian PSD
    Eigen::MatrixXcd a2;  // num_tx x num_tx, trace zero
    Eigen::MatrixXcd a3;  // num_tx x num_tx, Hermitian PSD, trace = num_rx * num_tx
    double prior_fisher = 0.0;
    int num_rx = 0;
    int quadrature_nodes = 0;
};

struct SensingLinkBudget {
    cxd alpha{0.0, 0.0};     // two-way complex gain
    int symbols = 1;         // L
    double noise_var = 1.0;  // sigma_S^2 per receive element and symbol

    double alpha_mag2() const { return std::norm(alpha); }
    // 2 |alpha|^2 L / sigma_S^2, the weight of g(R) in the information total.
    double gain_coeff() const { return 2.0 * alpha_mag2() * symbols / noise_var; }
};

// Prior-averaged matrices via refined periodic quadrature; also evaluates the
// prior score energy so downstream code has the full information budget.
SensingMatrices assemble_matrices(const UpaGeometry& g, const SceneAngles& target,
                                  const VonMisesMixture& prior,
                                  const QuadratureControl& ctl = {});

// Closed-form matrices for a point prior at `theta`; prior_fisher is zero.
SensingMatrices point_mass_matrices(const UpaGeometry& g, const SceneAngles& target,
                                    double theta);

// g(R).  Requires tr(A3 R) > 0 unless R vanishes, in which case 0 is
// returned; otherwise throws std::domain_error.
double sensing_gain(const SensingMatrices& m, const Eigen::MatrixXcd& rx);

// pcrb from an already-computed gain; throws std::domain_error when the total
// information is not positive.
double pcrb_from_gain(double gain, double prior_fisher, double gain_coeff);

double pcrb_periodic(const SensingMatrices& m, const SensingLinkBudget& link,
                     const Eigen::MatrixXcd& rx);

// The 3x3 real information blocks over (theta, Re alpha, Im alpha); the
// prior term is not included in j_theta_theta.
struct FimBlocks {
    double j_theta_theta = 0.0;
    Eigen::RowVector2d j_theta_alpha = Eigen::RowVector2d::Zero();
    double j_alpha_alpha = 0.0;  // times the 2x2 identity
};

FimBlocks fim_blocks(const SensingMatrices& m, const SensingLinkBudget& link,
                     const Eigen::MatrixXcd& rx);

}  // namespace isac
