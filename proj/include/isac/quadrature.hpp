#pragma once

// Periodic quadrature over [-pi, pi).  The uniform rectangle rule (equal to
// the trapezoid rule for periodic integrands) is spectrally accurate for
// smooth 2*pi-periodic functions, so the grid is doubled until two successive
// evaluations agree to a relative tolerance rather than using error
// expansions.

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "isac/errors.hpp"

namespace isac {

struct QuadratureControl {
    int initial_nodes = 4096;
    int max_doublings = 6;
    double rel_tol = 1e-8;
};

// Nodes theta_i = -pi + i * (2 pi / n); every node carries weight 2 pi / n.
Eigen::ArrayXd periodic_nodes(int n);

// Doubling driver over an arbitrary result type.  `eval_at(n)` integrates on
// the n-node grid; `rel_dist(cur, prev)` returns a normalised distance which
// is compared against ctl.rel_tol.  Throws QuadratureError when the budget of
// doublings is exhausted, naming `what` in the message.  On success stores the
// final grid size in *nodes_used when given.
template <class T, class EvalFn, class DistFn>
T refine_periodic(EvalFn&& eval_at, DistFn&& rel_dist, const QuadratureControl& ctl,
                  const std::string& what, int* nodes_used = nullptr) {
    int n = ctl.initial_nodes;
    T prev = eval_at(n);
    for (int k = 0; k < ctl.max_doublings; ++k) {
        n *= 2;
        T cur = eval_at(n);
        if (rel_dist(cur, prev) <= ctl.rel_tol) {
            if (nodes_used) *nodes_used = n;
            return cur;
        }
        prev = std::move(cur);
    }
    throw QuadratureError("periodic quadrature did not settle for " + what +
                          " within the refinement budget");
}

double integrate_periodic(const std::function<double(double)>& f,
                          const QuadratureControl& ctl = {},
                          const std::string& what = "integrand");

}  // namespace isac
