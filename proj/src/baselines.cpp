#include "isac/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace isac {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

VectorXcd physical_channel(const ConvexInstance& inst) {
    return inst.h_unit * std::sqrt(inst.h_norm2);
}

bool meets_rate(const ConvexInstance& inst, const VectorXcd& w) {
    const VectorXcd h = physical_channel(inst);
    return std::norm(h.dot(w)) >= inst.gamma * inst.noise_comm * (1.0 - 1e-12);
}

void gauge_phase(VectorXcd& w, const ConvexInstance& inst) {
    const cxd inner = inst.h_unit.dot(w);
    if (std::abs(inner) > 1e-12 * w.norm()) {
        w *= std::polar(1.0, -std::arg(inner));
    }
}

}  // namespace

BeamSolution sensing_oriented(const ConvexInstance& inst, const SensingMatrices& scoring,
                              const SensingLinkBudget& link, const Tolerances& tol) {
    ConvexInstance free_inst = inst;
    free_inst.gamma = 0.0;
    free_inst.rate_floor = 0.0;
    free_inst.rate_target = 0.0;
    const RelaxedSolution rel = solve_relaxation(free_inst);
    const Certificate cert = recover_certificate(free_inst, rel, tol);
    BeamSolution out = purify(free_inst, rel, cert, scoring, link, tol);
    // The single beam carries the sensing waveform; the reported rate is what
    // the user gets from decoding it directly, independent of any target.
    out.sensing = {out.w};
    out.rate = rate_of(physical_channel(inst), out.w, {}, inst.noise_comm);
    out.w = VectorXcd::Zero(inst.dim());
    return out;
}

BeamSolution dual_functional(const ConvexInstance& inst, const SensingMatrices& scoring,
                             const SensingLinkBudget& link, const Tolerances& tol,
                             const RandomizeOptions& ropt) {
    const RelaxedSolution rel = solve_comm_only_relaxation(inst);
    const int n = inst.dim();

    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (rel.rc_scaled +
                                                       rel.rc_scaled.adjoint()));
    const VectorXd ev = es.eigenvalues().reverse();
    const MatrixXcd evec = es.eigenvectors().rowwise().reverse();

    // Principal eigenvector first: exact whenever the restricted optimum is
    // rank one, which the rate-tilted structure gives on most instances.
    VectorXcd w = std::sqrt(std::max(ev(0), 0.0) * inst.power) * evec.col(0);
    gauge_phase(w, inst);
    w = nudge_to_rate_floor(w, {}, inst);
    bool randomized = false;

    if (numerical_rank(rel.rc_scaled, tol.cluster) > 1 || !meets_rate(inst, w)) {
        // Scaled Gaussian randomization: draw from the relaxed covariance,
        // spend the full budget, keep rate-feasible candidates (rotated back
        // to the floor when slightly short), best gain wins.  The matched
        // single beam along h is always feasible and seeds the search.
        randomized = true;
        const MatrixXcd root =
            es.operatorSqrt();  // PSD square root of the relaxed covariance
        std::mt19937_64 rng(ropt.seed);
        std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
        VectorXcd best = std::sqrt(inst.power) * inst.h_unit;
        double best_gain = gain_scaled(inst, best * best.adjoint() / inst.power);
        for (int s = 0; s < ropt.samples; ++s) {
            VectorXcd draw(n);
            for (int i = 0; i < n; ++i) draw(i) = cxd(gauss(rng), gauss(rng));
            VectorXcd cand = root * draw;
            if (cand.norm() < 1e-12) continue;
            cand *= std::sqrt(inst.power) / cand.norm();
            gauge_phase(cand, inst);
            cand = nudge_to_rate_floor(cand, {}, inst, 3.2);
            if (!meets_rate(inst, cand)) continue;
            const double g = gain_scaled(inst, cand * cand.adjoint() / inst.power);
            if (g > best_gain) {
                best_gain = g;
                best = cand;
            }
        }
        w = best;
    }

    BeamSolution out;
    out.case_label = KktCase::II;  // single communication beam by construction
    out.purification_applied = randomized;
    out.rank_rc = numerical_rank(rel.rc_scaled, tol.cluster);
    out.rank_rs = 0;
    // No beam-structure certificate exists for the restricted design; the
    // solver's relative gap stands in for the residual column.
    out.kkt_residual = rel.gap_rel;
    out.w = w;
    const double g_hat = gain_scaled(inst, w * w.adjoint() / inst.power);
    out.gain_purified = g_hat * inst.matrix_scale * inst.power;
    out.tight_rel =
        std::abs(g_hat - rel.t_scaled) / std::max(std::abs(rel.t_scaled), 1e-300);
    out.rate = rate_of(physical_channel(inst), w, {}, inst.noise_comm);
    out.pcrb = pcrb_periodic(scoring, link, beam_covariance(w, {}));
    return out;
}

BeamSolution most_probable_angle(const ConvexInstance& inst, const UpaGeometry& geom,
                                 const SceneAngles& target, const VonMisesMixture& prior,
                                 const SensingMatrices& scoring,
                                 const SensingLinkBudget& link, const Tolerances& tol) {
    const double theta_mode = argmax_pdf(prior);
    const SensingMatrices planning = point_mass_matrices(geom, target, theta_mode);
    const ConvexInstance plan = build_instance(planning, physical_channel(inst),
                                               inst.rate_target, inst.power,
                                               inst.noise_comm);
    const RelaxedSolution rel = solve_relaxation(plan);
    const Certificate cert = recover_certificate(plan, rel, tol);
    return purify(plan, rel, cert, scoring, link, tol);
}

}  // namespace isac
