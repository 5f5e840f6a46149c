#pragma once

// Joint transmit-covariance design: maximize the observation gain g(R) under
// a user rate floor and a power cap, via the exact semidefinite relaxation
//
//   max  t   s.t.  [[tr(A1 R) - t, tr(A2 R)], [tr(A2 R)^*, tr(A3 R)]] >= 0,
//                  h^H R_C h >= gamma (sigma_C^2 + h^H R_S h),
//                  tr(R_C + R_S) <= P,   R_C, R_S >= 0,   R = R_C + R_S,
//
// solved in a normalised frame (unit power budget, unit |h|, A-matrices
// divided by tr(A1)/N) over the real embedding of the Hermitian variables.
// The equality multipliers reproduce the rank-one certificate
//   Z_B = [[1, z2], [z2^*, z3]],   D = A1 + z2 A2^H + z2^* A2 + z3 A3,
//   Z_C = mu_P I - D - mu_R h h^H,   Z_S = mu_P I - D + gamma mu_R h h^H,
// whose spectrum classifies the optimal beam structure:
//   case I   (mu_R ~ 0)          single beam along the top eigenvector of D,
//   case II  (top gap positive)  single communication beam,
//   case III (eigenvalues tie)   communication beam plus one sensing beam.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isac/errors.hpp"
#include "isac/fisher.hpp"
#include "isac/sdp.hpp"

namespace isac {

struct Tolerances {
    double feas = 1e-7;     // accepted constraint violation, normalised units
    double kkt = 1e-6;      // accepted stationarity/complementarity residual
    double cluster = 1e-6;  // relative eigenvalue clustering width
    double mu = 1e-7;       // mu_R below this (relative to d1) means case I
    double lambda = 1e-6;   // case II vs III eigengap threshold (relative)
    double tight = 1e-6;    // purified-vs-relaxed objective agreement
    double rate = 1e-9;     // tolerated purified rate shortfall, bps/Hz
};

// Normalised problem data.  Complex matrices are kept alongside their real
// embedding inputs; `matrix_scale`, `power` and `h_norm2` undo the scaling.
struct ConvexInstance {
    Eigen::MatrixXcd a1, a2, a3;  // divided by matrix_scale
    Eigen::VectorXcd h_unit;      // h / |h|
    double gamma = 0.0;           // 2^rate - 1
    double rate_floor = 0.0;      // gamma sigma_C^2 / (P |h|^2)
    double power = 0.0;           // P, watts
    double matrix_scale = 1.0;    // tr(A1) / N
    double h_norm2 = 0.0;         // |h|^2
    double noise_comm = 0.0;      // sigma_C^2
    double rate_target = 0.0;     // bps/Hz

    int dim() const { return static_cast<int>(a1.rows()); }
    bool feasible() const { return rate_floor <= 1.0 + 1e-12; }
};

ConvexInstance build_instance(const SensingMatrices& m, const Eigen::VectorXcd& h,
                              double rate_bpshz, double power, double sigma_c2);

// Relaxation output.  Primal blocks are reported in watts; the dual data stay
// in the normalised frame where all certificate identities are checked.
struct RelaxedSolution {
    Eigen::MatrixXcd rc, rs;              // watts
    Eigen::MatrixXcd rc_scaled, rs_scaled;  // normalised frame (trace <= 1)
    double t_scaled = 0.0;                // optimal g in the normalised frame
    double t_opt = 0.0;                   // optimal g, physical units
    Eigen::Matrix2cd zb;                  // z1 normalised to 1
    double z1 = 1.0;                      // raw multiplier before normalising
    std::complex<double> z2;
    double z3 = 0.0;
    double mu_rate = 0.0, mu_power = 0.0;
    Eigen::MatrixXcd zc, zs;              // solver dual slacks, normalised frame
    double gap_rel = 0.0, primal_infeas = 0.0, dual_infeas = 0.0;
    int iters = 0;
};

// Throws SolverError when the interior-point method fails to converge and
// std::invalid_argument when the instance is infeasible.
RelaxedSolution solve_relaxation(const ConvexInstance& inst, const sdp::Options& opts = {});

// Same relaxation with the dedicated sensing covariance removed (R_S forced
// to zero); rs and zs come back empty-equivalent (zero matrices) and no
// certificate applies.  Used by the no-dedicated-beam benchmark.
RelaxedSolution solve_comm_only_relaxation(const ConvexInstance& inst,
                                           const sdp::Options& opts = {});

struct Certificate {
    std::complex<double> z2;
    double mu_rate = 0.0, mu_power = 0.0;
    Eigen::MatrixXcd d_star;     // normalised frame
    Eigen::VectorXd evals;       // descending
    Eigen::MatrixXcd evecs;      // columns match evals
    int top_multiplicity = 1;    // cluster size at tol.cluster
    double top_gap = 0.0;        // d1 - d_{E+1} (0 when the cluster spans all)
};

Certificate recover_certificate(const ConvexInstance& inst, const RelaxedSolution& rel,
                                const Tolerances& tol = {});

enum class KktCase { I, II, III };

std::string to_string(KktCase c);

KktCase classify_case(const ConvexInstance& inst, const Certificate& cert,
                      const Tolerances& tol = {});

// Scaled residuals of the optimality system, all dimensionless.
struct KktResiduals {
    double comp_b = 0.0;        // <Z_B, B(t, R)>
    double comp_rate = 0.0;     // mu_R x rate slack
    double comp_power = 0.0;    // mu_P x power slack
    double comp_rc = 0.0;       // <Z_C, R_C>
    double comp_rs = 0.0;       // <Z_S, R_S>
    double stat_rc = 0.0;       // solver slack vs certificate identity, R_C
    double stat_rs = 0.0;       // solver slack vs certificate identity, R_S
    double z1_dev = 0.0;        // |z1 - 1|
    double z3_dev = 0.0;        // |z3 - |z2|^2| / max(1, |z2|^2)
    double zc_neg = 0.0;        // negative spectrum of the reconstructed Z_C
    double zs_neg = 0.0;
    double max() const;
};

KktResiduals kkt_residuals(const ConvexInstance& inst, const RelaxedSolution& rel,
                           const Certificate& cert);

// Achievable rate of beams (w, S) at user channel h:
// log2(1 + |h^H w|^2 / (sum_k |h^H s_k|^2 + sigma_c2)).
double rate_of(const Eigen::VectorXcd& h, const Eigen::VectorXcd& w,
               const std::vector<Eigen::VectorXcd>& sensing, double sigma_c2);

// g(R) evaluated with the instance's normalised matrices; R in the same
// frame (rc_scaled and friends).  Physical gain is this times
// matrix_scale * power when R carries unit total power.
double gain_scaled(const ConvexInstance& inst, const Eigen::MatrixXcd& r);

// Smallest rotation of w toward the channel inside span{w, h} that restores
// the rate floor at unchanged power; returns w untouched when the floor
// already holds, and w unchanged when no rotation up to max_angle reaches
// it.  The output keeps h^H w real nonnegative.
Eigen::VectorXcd nudge_to_rate_floor(const Eigen::VectorXcd& w,
                                     const std::vector<Eigen::VectorXcd>& sensing,
                                     const ConvexInstance& inst,
                                     double max_angle = 1e-4);

Eigen::MatrixXcd beam_covariance(const Eigen::VectorXcd& w,
                                 const std::vector<Eigen::VectorXcd>& sensing);

// Count of eigenvalues above rel_tol times the largest; 0 for non-positive
// matrices.
int numerical_rank(const Eigen::MatrixXcd& psd, double rel_tol = 1e-6);

// Same count against an external scale, so a block that is zero up to solver
// noise reports rank 0 instead of ranking its own noise floor.
int numerical_rank(const Eigen::MatrixXcd& psd, double rel_tol, double scale);

struct BeamSolution {
    Eigen::VectorXcd w;                     // communication beam (may be zero)
    std::vector<Eigen::VectorXcd> sensing;  // zero or one dedicated beam
    double pcrb = 0.0;
    double rate = 0.0;  // bps/Hz
    KktCase case_label = KktCase::I;
    Eigen::MatrixXcd d_star;  // normalised frame
    Eigen::VectorXd evals;
    int top_multiplicity = 1;
    bool purification_applied = false;
    double gain_purified = 0.0;  // physical units, equals t_opt at tolerance
    double tight_rel = 0.0;      // |g_purified - t_opt| / t_opt
    int rank_rc = 0, rank_rs = 0;  // numerical ranks of the relaxed blocks
    double kkt_residual = 0.0;     // max scaled residual (solver gap when no
                                   // certificate applies, see dual_functional)
};

// Rank-one extraction.  `scoring` supplies the matrices/link used for the
// reported pcrb (they differ from the solve matrices for the point-prior
// baseline).  Throws CertificateError when the construction loses objective
// or rate beyond tolerance.
BeamSolution purify(const ConvexInstance& inst, const RelaxedSolution& rel,
                    const Certificate& cert, const SensingMatrices& scoring,
                    const SensingLinkBudget& link, const Tolerances& tol = {});

// Independent solve of the same instance by Newton path-following on the
// log-barrier of the smooth concave objective
//   g(R) = tr(A1 R) - |tr(A2 R)|^2 / tr(A3 R),
// which never forms the 2x2 lifting and exposes no certificate.  Returns the
// optimal g in the normalised frame.  Used to cross-check the main path.
double barrier_reference_gain(const ConvexInstance& inst, double rel_gap = 1e-7);

}  // namespace isac
