#pragma once

// Dense primal-dual interior-point solver for small block-diagonal
// semidefinite programs in standard form
//
//   minimize    sum_j <C_j, X_j>  +  c_f . u
//   subject to  sum_j <A_ij, X_j> + F_i . u = b_i      (i = 1..m)
//               X_j  in the real symmetric PSD cone,  u free,
//
// using Nesterov-Todd scaling with a Mehrotra predictor-corrector step.  The
// normal system is formed densely; intended for a handful of constraints and
// block orders up to a few dozen, where a factorized sparse solver would be
// overhead with no payoff.

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace isac::sdp {

enum class Status { optimal, max_iters, stalled, numerical };

std::string to_string(Status s);

struct Options {
    int max_iters = 100;
    double tol_gap = 1e-9;    // relative duality gap
    double tol_feas = 1e-9;   // scaled primal/dual residual norms
    double step_frac = 0.98;  // fraction of the distance to the cone boundary
    bool trace = false;
};

struct Problem {
    std::vector<int> block_dims;
    std::vector<Eigen::MatrixXd> cost;               // per block; empty means zero
    std::vector<std::vector<Eigen::MatrixXd>> rows;  // rows[i][j]; empty means zero
    Eigen::VectorXd rhs;                             // length m
    Eigen::MatrixXd free_coeff;                      // m x n_free (0 cols allowed)
    Eigen::VectorXd free_cost;                       // length n_free

    int num_rows() const { return static_cast<int>(rhs.size()); }
    int num_blocks() const { return static_cast<int>(block_dims.size()); }
    int num_free() const { return static_cast<int>(free_cost.size()); }
};

struct Result {
    Status status = Status::numerical;
    std::vector<Eigen::MatrixXd> x;  // primal blocks
    std::vector<Eigen::MatrixXd> z;  // dual slack blocks
    Eigen::VectorXd y;               // equality multipliers
    Eigen::VectorXd u;               // free primal variables
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    double gap_rel = 0.0;
    double primal_infeas = 0.0;
    double dual_infeas = 0.0;
    int iters = 0;

    bool converged() const { return status == Status::optimal; }
};

Result solve(const Problem& prob, const Options& opts = {});

}  // namespace isac::sdp
