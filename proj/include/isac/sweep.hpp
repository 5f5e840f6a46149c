#pragma once

// Rate-target sweep across the design schemes.  Each (rate, scheme) cell is
// solved independently; failures are recorded in the row's status and never
// abort the sweep.  Rows are ordered by (rate, scheme) with the scheme order
// fixed to proposed, b1, b2, b3.

#include <string>
#include <vector>

#include "isac/config.hpp"

namespace isac {

struct SweepRow {
    double rate_target = 0.0;
    std::string scheme;
    double pcrb = 0.0;
    double rate_achieved = 0.0;
    std::string case_label = "-";  // I / II / III, "-" when no solve happened
    int rank_rc = 0;               // numerical ranks of the relaxed blocks,
    int rank_rs = 0;               //   before purification
    double sensing_power_frac = 0.0;
    double kkt_residual = 0.0;  // max scaled certificate residual (solver gap
                                //   for b2, which has no beam certificate)
    double solve_ms = 0.0;
    // ok                : solved, achieved rate >= target - 1e-6
    // below_rate_floor  : solved, but the design ignores the floor (b1)
    // infeasible        : target above capacity, nothing to solve
    // solver_error / certificate_error / error : the cell failed
    std::string status = "ok";

    // Extra diagnostics, not part of the CSV contract.
    double tight_rel = 0.0;
    int sensing_beams = 0;
    bool failed() const { return status != "ok" && status != "below_rate_floor"; }
};

// The rate grid a config implies: the explicit list (sorted) when given,
// otherwise `points` values evenly spaced on [0.1, 0.99 * capacity].
std::vector<double> sweep_rate_grid(const ExperimentConfig& c, double capacity);

std::vector<SweepRow> run_sweep(const ExperimentConfig& c);

// Columns, in order: rate_target_bpshz, scheme, pcrb, rate_achieved_bpshz,
// case, rank_rc, rank_rs, sensing_power_frac, kkt_residual, solve_ms, status.
// Floats carry 12 significant digits; an empty table yields the header only.
std::string to_csv(const std::vector<SweepRow>& rows);

// Fixed-width listing for terminals.
std::string to_human(const std::vector<SweepRow>& rows);

// Contract checks used by the CLI's --strict mode: rate floors met on ok
// rows, proposed pcrb non-decreasing in the target, proposed at most one
// sensing beam and tight, and never beaten by a benchmark beyond tolerance.
// Returns human-readable violation descriptions, empty when clean.
std::vector<std::string> check_invariants(const std::vector<SweepRow>& rows);

}  // namespace isac
