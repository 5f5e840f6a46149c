#include "isac/beamopt.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include "isac/embedding.hpp"

namespace isac {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

MatrixXcd herm(const MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

// Eigenpairs sorted by descending eigenvalue.
void eig_desc(const MatrixXcd& m, VectorXd& evals, MatrixXcd& evecs) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(herm(m));
    if (es.info() != Eigen::Success) {
        throw SolverError("Hermitian eigendecomposition failed", "numerical");
    }
    evals = es.eigenvalues().reverse();
    evecs = es.eigenvectors().rowwise().reverse();
}

double top_eigenvalue(const MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(herm(m));
    if (es.info() != Eigen::Success) {
        throw SolverError("Hermitian eigendecomposition failed", "numerical");
    }
    return es.eigenvalues().maxCoeff();
}

// D(z) = A1 + z A2^H + z^* A2 + |z|^2 A3; Hermitian for any z, and
// g(R) = min_z tr(D(z) R) for PSD R with tr(A3 R) > 0.
MatrixXcd d_of_z(const ConvexInstance& inst, cxd z) {
    return herm(inst.a1 + z * inst.a2.adjoint() + std::conj(z) * inst.a2 +
                std::norm(z) * inst.a3);
}

struct GainMoments {
    double x = 0.0;  // tr(A1 R)
    cxd u{0.0, 0.0};  // tr(A2 R)
    double v = 0.0;  // tr(A3 R)
};

GainMoments moments(const ConvexInstance& inst, const MatrixXcd& r) {
    GainMoments m;
    m.x = std::real((inst.a1 * r).trace());
    m.u = (inst.a2 * r).trace();
    m.v = std::real((inst.a3 * r).trace());
    return m;
}

void fix_phase_largest(VectorXcd& vec) {
    int idx = 0;
    double best = -1.0;
    for (int i = 0; i < vec.size(); ++i) {
        if (std::abs(vec(i)) > best) {
            best = std::abs(vec(i));
            idx = i;
        }
    }
    if (best > 0.0) vec *= std::polar(1.0, -std::arg(vec(idx)));
}

// Rotate so that ref^H vec is real nonnegative; falls back to pinning the
// largest entry when the overlap is negligible.
void fix_phase_against(VectorXcd& vec, const VectorXcd& ref) {
    const cxd inner = ref.dot(vec);
    if (std::abs(inner) > 1e-12 * vec.norm()) {
        vec *= std::polar(1.0, -std::arg(inner));
    } else {
        fix_phase_largest(vec);
    }
}

}  // namespace

// |u|^2 <= x v for moments of a PSD R, so the correction vanishes with v and
// dropping it is the correct limit.
double gain_scaled(const ConvexInstance& inst, const MatrixXcd& r) {
    const GainMoments m = moments(inst, r);
    if (m.v <= 1e-14 * std::max(1.0, std::abs(m.x))) return m.x;
    return m.x - std::norm(m.u) / m.v;
}

// Rotating inside span{w, h} keeps the power fixed while |h^H w| sweeps
// [pw * a, pw * amp]; the smallest admissible angle is therefore exact.
VectorXcd nudge_to_rate_floor(const VectorXcd& w,
                              const std::vector<VectorXcd>& sensing,
                              const ConvexInstance& inst, double max_angle) {
    if (!(inst.gamma > 0.0) || w.norm() == 0.0) return w;
    const VectorXcd h_phys = inst.h_unit * std::sqrt(inst.h_norm2);
    double interference = 0.0;
    for (const auto& s : sensing) interference += std::norm(h_phys.dot(s));
    const double need2 = inst.gamma * (inst.noise_comm + interference);
    const double pw = w.norm();
    VectorXcd w_dir = w / pw;
    fix_phase_against(w_dir, inst.h_unit);
    const double a = std::real(h_phys.dot(w_dir));  // >= 0 by phase gauge
    if (pw * std::max(a, 0.0) >= std::sqrt(need2)) return pw * w_dir;
    const VectorXcd p_raw = h_phys - w_dir * h_phys.dot(w_dir);
    const double b = p_raw.norm();
    const double amp = std::hypot(a, b);
    const double c_need = std::sqrt(need2) / pw;
    if (b <= 0.0 || c_need > amp) return pw * w_dir;
    const double angle = std::asin(std::min(1.0, c_need / amp)) - std::atan2(a, b);
    if (!(angle > 0.0) || angle >= max_angle) return pw * w_dir;
    VectorXcd out = pw * (std::cos(angle) * w_dir + std::sin(angle) * (p_raw / b));
    fix_phase_against(out, inst.h_unit);
    return out;
}

ConvexInstance build_instance(const SensingMatrices& m, const VectorXcd& h,
                              double rate_bpshz, double power, double sigma_c2) {
    if (!(power > 0.0) || !std::isfinite(power)) {
        throw std::invalid_argument("power budget must be positive");
    }
    if (!(sigma_c2 > 0.0) || !std::isfinite(sigma_c2)) {
        throw std::invalid_argument("communication noise variance must be positive");
    }
    if (!(rate_bpshz >= 0.0) || !std::isfinite(rate_bpshz)) {
        throw std::invalid_argument("rate target must be nonnegative and finite");
    }
    if (h.size() != m.a1.rows()) {
        throw std::invalid_argument("channel length does not match the sensing matrices");
    }
    ConvexInstance inst;
    const double scale = std::real(m.a1.trace()) / static_cast<double>(m.a1.rows());
    if (!(scale > 0.0)) throw std::invalid_argument("sensing matrices are degenerate");
    inst.a1 = herm(m.a1) / scale;
    inst.a2 = m.a2 / scale;
    inst.a3 = herm(m.a3) / scale;
    inst.matrix_scale = scale;
    inst.h_norm2 = h.squaredNorm();
    if (!(inst.h_norm2 > 0.0)) throw std::invalid_argument("user channel must be nonzero");
    inst.h_unit = h / std::sqrt(inst.h_norm2);
    inst.gamma = std::exp2(rate_bpshz) - 1.0;
    inst.rate_floor = inst.gamma * sigma_c2 / (power * inst.h_norm2);
    inst.power = power;
    inst.noise_comm = sigma_c2;
    inst.rate_target = rate_bpshz;
    return inst;
}

namespace {

// Lift to the solver's standard form over blocks
//   (X_C, [X_S,] Y, s_rate, s_power) = (embed R_C, [embed R_S,] embed B,
// slacks) plus one free variable t; X_S is omitted when the design has no
// dedicated sensing covariance.  Six equality rows: four tie the entries of
// B to the moments of R = R_C + R_S, one each for the rate and power
// inequalities.  For Hermitian A and the embedding X of Hermitian R,
// <embed(A), X> / 2 = Re tr(A R), which fixes all coefficients below.
sdp::Problem lift(const ConvexInstance& inst, bool with_sensing) {
    const int n = inst.dim();
    const MatrixXcd h2re = herm(inst.a2);
    const MatrixXcd h2im = (inst.a2 - inst.a2.adjoint()) / cxd(0.0, 2.0);
    Eigen::Matrix2cd s11, s22, sre, sim;
    s11 << 1, 0, 0, 0;
    s22 << 0, 0, 0, 1;
    sre << 0, 1, 1, 0;
    sim << 0, cxd(0.0, -1.0), cxd(0.0, 1.0), 0;
    const MatrixXcd hh = inst.h_unit * inst.h_unit.adjoint();
    const MatrixXcd eye = MatrixXcd::Identity(n, n);
    const int iy = with_sensing ? 2 : 1;  // Y block index; slacks follow it

    sdp::Problem p;
    if (with_sensing) {
        p.block_dims = {2 * n, 2 * n, 4, 1, 1};
    } else {
        p.block_dims = {2 * n, 4, 1, 1};
    }
    const int nblocks = static_cast<int>(p.block_dims.size());
    p.cost.assign(nblocks, MatrixXd());
    p.rows.assign(6, std::vector<MatrixXd>(nblocks));
    p.rhs = VectorXd::Zero(6);
    p.free_coeff = MatrixXd::Zero(6, 1);
    p.free_cost = VectorXd::Constant(1, -1.0);  // maximize t

    auto put = [&p](int i, int j, const MatrixXcd& m, double w) {
        p.rows[i][j] = w * embed_hermitian(m);
    };
    auto put_r = [&](int i, const MatrixXcd& m, double w_c, double w_s) {
        put(i, 0, m, w_c);
        if (with_sensing) put(i, 1, m, w_s);
    };
    // tr(A1 R) - t = B_11
    put_r(0, inst.a1, 0.5, 0.5);
    put(0, iy, s11, -0.5);
    p.free_coeff(0, 0) = -1.0;
    // tr(A3 R) = B_22
    put_r(1, inst.a3, 0.5, 0.5);
    put(1, iy, s22, -0.5);
    // Re tr(A2 R) = Re B_12
    put_r(2, h2re, 0.5, 0.5);
    put(2, iy, sre, -0.25);
    // Im tr(A2 R) = Im B_12
    put_r(3, h2im, 0.5, 0.5);
    put(3, iy, sim, 0.25);
    // h^H R_C h - gamma h^H R_S h - s_rate = rate_floor
    put_r(4, hh, 0.5, -0.5 * inst.gamma);
    p.rows[4][iy + 1] = -MatrixXd::Identity(1, 1);
    p.rhs(4) = inst.rate_floor;
    // tr(R_C) + tr(R_S) + s_power = 1
    put_r(5, eye, 0.5, 0.5);
    p.rows[5][iy + 2] = MatrixXd::Identity(1, 1);
    p.rhs(5) = 1.0;
    return p;
}

RelaxedSolution solve_lifted(const ConvexInstance& inst, const sdp::Options& opts,
                             bool with_sensing) {
    if (!inst.feasible()) {
        throw std::invalid_argument("rate floor exceeds the channel capacity at this power");
    }
    const sdp::Problem prob = lift(inst, with_sensing);
    const sdp::Result res = sdp::solve(prob, opts);
    if (!res.converged()) {
        std::ostringstream msg;
        msg << "relaxation did not converge: status=" << sdp::to_string(res.status)
            << " gap=" << res.gap_rel << " pinf=" << res.primal_infeas
            << " dinf=" << res.dual_infeas;
        throw SolverError(msg.str(), sdp::to_string(res.status));
    }

    const int n = inst.dim();
    RelaxedSolution out;
    out.rc_scaled = extract_hermitian(res.x[0]);
    out.rs_scaled = with_sensing ? extract_hermitian(res.x[1])
                                 : MatrixXcd::Zero(n, n).eval();
    out.rc = inst.power * out.rc_scaled;
    out.rs = inst.power * out.rs_scaled;
    out.t_scaled = res.u(0);
    out.t_opt = res.u(0) * inst.matrix_scale * inst.power;

    // The multiplier of the first row is the (1,1) entry of the 2x2 dual
    // block and equals 1 by dual feasibility against the free variable; the
    // remaining rows carry z2, z3 and the inequality multipliers.  Everything
    // is normalised by z1 so the certificate identities hold exactly.
    const double z1 = res.y(0);
    if (std::abs(z1 - 1.0) > 1e-3) {
        std::ostringstream msg;
        msg << "dual block is not normalised: z1=" << z1;
        throw CertificateError(msg.str());
    }
    out.z1 = z1;
    out.z2 = cxd(res.y(2), res.y(3)) / (2.0 * z1);
    out.z3 = res.y(1) / z1;
    out.mu_rate = std::max(0.0, res.y(4) / z1);
    out.mu_power = std::max(0.0, -res.y(5) / z1);
    out.zb << 1.0, out.z2, std::conj(out.z2), out.z3;
    out.zc = extract_hermitian(res.z[0]) * (2.0 / z1);
    out.zs = with_sensing ? (extract_hermitian(res.z[1]) * (2.0 / z1)).eval()
                          : MatrixXcd::Zero(n, n).eval();
    out.gap_rel = res.gap_rel;
    out.primal_infeas = res.primal_infeas;
    out.dual_infeas = res.dual_infeas;
    out.iters = res.iters;
    return out;
}

}  // namespace

RelaxedSolution solve_relaxation(const ConvexInstance& inst, const sdp::Options& opts) {
    return solve_lifted(inst, opts, true);
}

RelaxedSolution solve_comm_only_relaxation(const ConvexInstance& inst,
                                           const sdp::Options& opts) {
    return solve_lifted(inst, opts, false);
}

Certificate recover_certificate(const ConvexInstance& inst, const RelaxedSolution& rel,
                                const Tolerances& tol) {
    Certificate cert;
    cert.z2 = rel.z2;
    cert.mu_rate = rel.mu_rate;
    cert.mu_power = rel.mu_power;
    cert.d_star = d_of_z(inst, rel.z2);
    eig_desc(cert.d_star, cert.evals, cert.evecs);
    const int n = inst.dim();
    const double width = tol.cluster * std::max(std::abs(cert.evals(0)), 1e-12);
    int e = 1;
    while (e < n && cert.evals(0) - cert.evals(e) <= width) ++e;
    cert.top_multiplicity = e;
    cert.top_gap = e < n ? cert.evals(0) - cert.evals(e) : 0.0;
    return cert;
}

std::string to_string(KktCase c) {
    switch (c) {
        case KktCase::I: return "I";
        case KktCase::II: return "II";
        case KktCase::III: return "III";
    }
    return "?";
}

KktCase classify_case(const ConvexInstance& inst, const Certificate& cert,
                      const Tolerances& tol) {
    const double scale = std::max(cert.evals(0), 1e-300);
    if (cert.mu_rate <= tol.mu * scale) return KktCase::I;
    const MatrixXcd hh = inst.h_unit * inst.h_unit.adjoint();
    const double lam_c = top_eigenvalue(cert.d_star + cert.mu_rate * hh);
    const double lam_s = top_eigenvalue(cert.d_star - inst.gamma * cert.mu_rate * hh);
    return lam_c - lam_s > tol.lambda * scale ? KktCase::II : KktCase::III;
}

double KktResiduals::max() const {
    double m = 0.0;
    for (double r : {comp_b, comp_rate, comp_power, comp_rc, comp_rs, stat_rc, stat_rs,
                     z1_dev, z3_dev, zc_neg, zs_neg}) {
        m = std::max(m, r);
    }
    return m;
}

KktResiduals kkt_residuals(const ConvexInstance& inst, const RelaxedSolution& rel,
                           const Certificate& cert) {
    const int n = inst.dim();
    const MatrixXcd r_sum = rel.rc_scaled + rel.rs_scaled;
    const GainMoments m = moments(inst, r_sum);
    const double unit = std::max(1.0, cert.evals(0));

    Eigen::Matrix2cd b;
    b << m.x - rel.t_scaled, m.u, std::conj(m.u), m.v;
    Eigen::Matrix2cd zb;
    zb << 1.0, cert.z2, std::conj(cert.z2), std::norm(cert.z2);

    const MatrixXcd hh = inst.h_unit * inst.h_unit.adjoint();
    const double rate_lhs = std::real((hh * rel.rc_scaled).trace()) -
                            inst.gamma * std::real((hh * rel.rs_scaled).trace());
    const double power_used = std::real(r_sum.trace());

    const MatrixXcd zc_id = cert.mu_power * MatrixXcd::Identity(n, n) - cert.d_star -
                            cert.mu_rate * hh;
    const MatrixXcd zs_id = cert.mu_power * MatrixXcd::Identity(n, n) - cert.d_star +
                            inst.gamma * cert.mu_rate * hh;

    KktResiduals res;
    res.comp_b = std::abs(std::real((zb * b).trace())) / unit;
    res.comp_rate = cert.mu_rate * std::abs(rate_lhs - inst.rate_floor) / unit;
    res.comp_power = cert.mu_power * std::abs(power_used - 1.0) / unit;
    res.comp_rc = std::abs(std::real((zc_id * rel.rc_scaled).trace())) / unit;
    res.comp_rs = std::abs(std::real((zs_id * rel.rs_scaled).trace())) / unit;
    res.stat_rc = (rel.zc - zc_id).norm() / unit;
    res.stat_rs = (rel.zs - zs_id).norm() / unit;
    res.z1_dev = std::abs(rel.z1 - 1.0);
    res.z3_dev = std::abs(rel.z3 - std::norm(rel.z2)) / std::max(1.0, std::norm(rel.z2));
    res.zc_neg = std::max(0.0, -Eigen::SelfAdjointEigenSolver<MatrixXcd>(zc_id)
                                    .eigenvalues()
                                    .minCoeff()) /
                 unit;
    res.zs_neg = std::max(0.0, -Eigen::SelfAdjointEigenSolver<MatrixXcd>(zs_id)
                                    .eigenvalues()
                                    .minCoeff()) /
                 unit;
    return res;
}

double rate_of(const VectorXcd& h, const VectorXcd& w,
               const std::vector<VectorXcd>& sensing, double sigma_c2) {
    const double signal = w.size() > 0 ? std::norm(h.dot(w)) : 0.0;
    double interference = 0.0;
    for (const auto& s : sensing) interference += std::norm(h.dot(s));
    return std::log2(1.0 + signal / (interference + sigma_c2));
}

Eigen::MatrixXcd beam_covariance(const VectorXcd& w,
                                 const std::vector<VectorXcd>& sensing) {
    Eigen::Index n = w.size();
    for (const auto& s : sensing) n = std::max(n, s.size());
    MatrixXcd r = MatrixXcd::Zero(n, n);
    if (w.size() > 0) r += w * w.adjoint();
    for (const auto& s : sensing) r += s * s.adjoint();
    return r;
}

int numerical_rank(const Eigen::MatrixXcd& psd, double rel_tol) {
    return numerical_rank(psd, rel_tol, -1.0);
}

int numerical_rank(const Eigen::MatrixXcd& psd, double rel_tol, double scale) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(herm(psd));
    const double lmax = es.eigenvalues().maxCoeff();
    if (scale <= 0.0) scale = lmax;
    if (!(lmax > 0.0) || !(scale > 0.0)) return 0;
    int rank = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        if (es.eigenvalues()(i) > rel_tol * scale) ++rank;
    }
    return rank;
}

namespace {

// Communication direction for the two-beam case: the part of the relaxed R_C
// outside the top eigenspace of D.  When that projection is numerically
// empty, fall back to vectors spanning the null space of Z_C (which contains
// the support of every optimal R_C) and keep the one contributing most rate.
VectorXcd split_comm_direction(const ConvexInstance& inst, const RelaxedSolution& rel,
                               const Certificate& cert) {
    const int n = inst.dim();
    const MatrixXcd v = cert.evecs.leftCols(cert.top_multiplicity);
    const MatrixXcd perp = MatrixXcd::Identity(n, n) - v * v.adjoint();
    VectorXd ev;
    MatrixXcd evec;
    eig_desc(herm(perp * rel.rc_scaled * perp), ev, evec);
    VectorXcd f = evec.col(0);
    auto rate_weight = [&](const VectorXcd& c) {
        const double beta = std::real(cxd(c.adjoint() * rel.rc_scaled * c));
        return std::max(beta, 0.0) * std::norm(inst.h_unit.dot(c));
    };
    if (ev(0) > 1e-12 && std::abs(inst.h_unit.dot(f)) > 1e-8) return f;

    std::vector<VectorXcd> cands;
    const MatrixXcd hh = inst.h_unit * inst.h_unit.adjoint();
    const MatrixXcd zc = cert.mu_power * MatrixXcd::Identity(n, n) - cert.d_star -
                         cert.mu_rate * hh;
    VectorXd zev;
    MatrixXcd zvec;
    eig_desc(zc, zev, zvec);  // null vectors sit at the bottom
    const double zthr = 1e-6 * std::max(std::abs(zev(0)), 1e-12);
    VectorXcd h_proj = VectorXcd::Zero(n);
    for (int i = n - 1; i >= 0 && std::abs(zev(i)) <= zthr; --i) {
        cands.push_back(zvec.col(i));
        h_proj += zvec.col(i) * zvec.col(i).dot(inst.h_unit);
    }
    if (h_proj.norm() > 1e-12) cands.push_back(h_proj.normalized());
    // Resolvent direction (d1 I - D)^+ h, the analytic communication
    // eigenvector when the top eigenvalue ties at mu_power.
    VectorXcd resolvent = VectorXcd::Zero(n);
    for (int i = cert.top_multiplicity; i < n; ++i) {
        const double gap = cert.evals(0) - cert.evals(i);
        if (gap > zthr) {
            resolvent += cert.evecs.col(i) * (cert.evecs.col(i).dot(inst.h_unit) / gap);
        }
    }
    if (resolvent.norm() > 1e-12) cands.push_back(resolvent.normalized());

    double best = rate_weight(f);
    for (const auto& c : cands) {
        const double score = rate_weight(c);
        if (score > best) {
            best = score;
            f = c;
        }
    }
    if (std::abs(inst.h_unit.dot(f)) <= 1e-10) {
        throw CertificateError(
            "no direction with channel overlap found in the relaxed solution");
    }
    return f;
}

}  // namespace

BeamSolution purify(const ConvexInstance& inst, const RelaxedSolution& rel,
                    const Certificate& cert, const SensingMatrices& scoring,
                    const SensingLinkBudget& link, const Tolerances& tol) {
    const int n = inst.dim();
    const double sqrt_p = std::sqrt(inst.power);
    const VectorXcd h_phys = inst.h_unit * std::sqrt(inst.h_norm2);

    BeamSolution out;
    out.case_label = classify_case(inst, cert, tol);
    out.d_star = cert.d_star;
    out.evals = cert.evals;
    out.top_multiplicity = cert.top_multiplicity;
    // Ranks share one scale: a block holding no power reports rank 0 rather
    // than ranking its own solver-noise floor.
    const double block_scale =
        std::max(top_eigenvalue(rel.rc_scaled), top_eigenvalue(rel.rs_scaled));
    out.rank_rc = numerical_rank(rel.rc_scaled, tol.cluster, block_scale);
    out.rank_rs = numerical_rank(rel.rs_scaled, tol.cluster, block_scale);
    out.kkt_residual = kkt_residuals(inst, rel, cert).max();

    VectorXcd w = VectorXcd::Zero(n);
    std::vector<VectorXcd> sensing;

    // Single beam on the top eigenspace of D, weighted by the relaxed
    // solution so a degenerate top cluster keeps the rate it earned there.
    // This is the optimal structure whenever the rate floor is slack.
    const auto floor_free_beam = [&]() {
        const MatrixXcd v = cert.evecs.leftCols(cert.top_multiplicity);
        VectorXd sev;
        MatrixXcd svec;
        eig_desc(v.adjoint() * (rel.rc_scaled + rel.rs_scaled) * v, sev, svec);
        return VectorXcd(sqrt_p * (v * svec.col(0)).normalized());
    };

    if (out.case_label != KktCase::I) {
        // Near the rate where the floor first binds, the solver sits on a
        // degenerate optimal face and its vanishing rate multiplier is pure
        // noise, which misleads the multiplier-based classifier.  The slack
        // case is self-certifying: if the floor-free beam still meets the
        // floor and gives up none of the objective, the floor is inactive at
        // an optimum and the point belongs to the slack case by definition.
        const VectorXcd cand = floor_free_beam();
        const double g_cand =
            gain_scaled(inst, (cand * cand.adjoint()) / inst.power);
        const bool keeps_gain = std::abs(g_cand - rel.t_scaled) <=
                                tol.tight * std::max(std::abs(rel.t_scaled), 1e-300);
        const bool meets_floor =
            rate_of(h_phys, cand, {}, inst.noise_comm) + tol.rate >=
            inst.rate_target;
        if (keeps_gain && meets_floor) out.case_label = KktCase::I;
    }

    if (out.case_label == KktCase::I) {
        w = floor_free_beam();
    } else if (out.case_label == KktCase::II) {
        // Single beam: the relaxed R_C is rank one, supported on the top
        // eigenvector of the rate-tilted certificate matrix.  Extract it from
        // the solved block, which meets the active rate floor at solver
        // precision where the reconstructed certificate would not.
        VectorXd ev;
        MatrixXcd evec;
        eig_desc(rel.rc_scaled + rel.rs_scaled, ev, evec);
        w = sqrt_p * evec.col(0);
    } else {
        // The relaxed R_C may be rank two with cross terms between the top
        // eigenspace of D and the channel image; only the latter carries
        // rate.  Beaming along R_C h keeps the full covariance: with q1
        // orthogonal to h the residual R_C + R_S - ww^H is exactly rank one
        // along q1, so gain, rate, and the power split survive unchanged.
        const VectorXcd img = rel.rc_scaled * inst.h_unit;
        const double hrch = std::real(inst.h_unit.dot(img));
        if (hrch > 1e-14) {
            w = sqrt_p * img / std::sqrt(hrch);
        } else {
            const VectorXcd f = split_comm_direction(inst, rel, cert);
            const double beta_c = std::clamp(
                std::real(cxd(f.adjoint() * rel.rc_scaled * f)), 0.0, 1.0);
            w = std::sqrt(beta_c * inst.power) * f;
        }
        const MatrixXcd resid = herm(rel.rc_scaled + rel.rs_scaled -
                                     (w * w.adjoint()) / inst.power);
        VectorXd rev;
        MatrixXcd rvec;
        eig_desc(resid, rev, rvec);
        const double cap = std::max(0.0, 1.0 - w.squaredNorm() / inst.power);
        const double beta_s = std::clamp(rev(0), 0.0, cap);
        if (beta_s > 0.0) {
            sensing.push_back(std::sqrt(beta_s * inst.power) * rvec.col(0));
        }
        out.purification_applied = true;
    }

    fix_phase_against(w, inst.h_unit);
    for (auto& s : sensing) fix_phase_largest(s);

    // An exact-arithmetic extraction meets the rate floor with equality; the
    // solved block keeps O(solver gap) mass in its spectral tail, so the beam
    // can fall short by that much.
    w = nudge_to_rate_floor(w, sensing, inst);

    MatrixXcd r_hat = beam_covariance(w, sensing) / inst.power;
    const double g_hat = gain_scaled(inst, r_hat);
    out.gain_purified = g_hat * inst.matrix_scale * inst.power;
    out.tight_rel = std::abs(g_hat - rel.t_scaled) /
                    std::max(std::abs(rel.t_scaled), 1e-300);
    if (out.tight_rel > tol.tight) {
        std::ostringstream msg;
        msg << "beam extraction lost objective: relaxed=" << rel.t_scaled
            << " purified=" << g_hat << " case=" << to_string(out.case_label);
        throw CertificateError(msg.str());
    }
    out.rate = rate_of(h_phys, w, sensing, inst.noise_comm);
    if (out.rate + tol.rate < inst.rate_target) {
        std::ostringstream msg;
        msg << "beam extraction lost rate: target=" << inst.rate_target
            << " achieved=" << out.rate << " case=" << to_string(out.case_label);
        throw CertificateError(msg.str());
    }
    out.w = w;
    out.sensing = std::move(sensing);
    out.pcrb = pcrb_periodic(scoring, link, beam_covariance(out.w, out.sensing));
    return out;
}

namespace {

// Coordinates of a Hermitian matrix in the orthonormal basis {e_p e_p^H}
// u {(e_p e_q^H + e_q e_p^H)/sqrt2} u {(i e_p e_q^H - i e_q e_p^H)/sqrt2}
// under <A, B> = Re tr(A B); enumeration order must match everywhere.
VectorXd herm_to_vec(const MatrixXcd& m) {
    const int n = static_cast<int>(m.rows());
    VectorXd v(n * n);
    int k = 0;
    for (int p = 0; p < n; ++p) v(k++) = std::real(m(p, p));
    const double s = std::sqrt(2.0);
    for (int p = 0; p < n; ++p) {
        for (int q = p + 1; q < n; ++q) {
            v(k++) = s * std::real(m(p, q));
            v(k++) = s * std::imag(m(p, q));
        }
    }
    return v;
}

MatrixXcd vec_to_herm(const VectorXd& v, int n) {
    MatrixXcd m(n, n);
    int k = 0;
    for (int p = 0; p < n; ++p) m(p, p) = v(k++);
    const double s = 1.0 / std::sqrt(2.0);
    for (int p = 0; p < n; ++p) {
        for (int q = p + 1; q < n; ++q) {
            const double re = v(k++);
            const double im = v(k++);
            m(p, q) = s * cxd(re, im);
            m(q, p) = s * cxd(re, -im);
        }
    }
    return m;
}

// Hessian of -log det at R in the basis above: H_ik = Re tr(Ri E_i Ri E_k),
// assembled one column at a time since Ri E_k Ri is a rank-<=2 update.
MatrixXd hess_logdet(const MatrixXcd& ri) {
    const int n = static_cast<int>(ri.rows());
    const int nn = n * n;
    MatrixXd h(nn, nn);
    int k = 0;
    for (int p = 0; p < n; ++p) {
        h.col(k++) = herm_to_vec(ri.col(p) * ri.col(p).adjoint());
    }
    const double s = 1.0 / std::sqrt(2.0);
    for (int p = 0; p < n; ++p) {
        for (int q = p + 1; q < n; ++q) {
            const MatrixXcd cross = ri.col(p) * ri.col(q).adjoint();
            h.col(k++) = herm_to_vec(s * (cross + cross.adjoint()));
            h.col(k++) = herm_to_vec(s * (cxd(0.0, 1.0) * cross +
                                          (cxd(0.0, 1.0) * cross).adjoint()));
        }
    }
    return 0.5 * (h + h.transpose());
}

struct BarrierPoint {
    MatrixXcd rc, rs;
    double slack_rate = 0.0, slack_power = 0.0;
    double logdet_rc = 0.0, logdet_rs = 0.0;
    MatrixXcd rc_inv, rs_inv;
    GainMoments mom;
    bool ok = false;
};

}  // namespace

// Path-following on
//   phi_tau = -tau g(R_C + R_S) - log det R_C - log det R_S
//             - log(rate slack) - log(power slack)
// with explicit Newton steps in the Hermitian coordinates above.  The
// objective enters only through the moments (tr A1 R, tr A2 R, tr A3 R), so
// its Hessian is the 3x3 quadratic-over-linear form lifted by a fixed 3 x n^2
// Jacobian; everything else is a standard log-barrier.
double barrier_reference_gain(const ConvexInstance& inst, double rel_gap) {
    if (!inst.feasible()) {
        throw std::invalid_argument("rate floor exceeds the channel capacity at this power");
    }
    const int n = inst.dim();
    const int nn = n * n;
    const MatrixXcd eye = MatrixXcd::Identity(n, n);
    const MatrixXcd hh = inst.h_unit * inst.h_unit.adjoint();
    const MatrixXcd h2re = herm(inst.a2);
    const MatrixXcd h2im = (inst.a2 - inst.a2.adjoint()) / cxd(0.0, 2.0);
    const double c_rate = inst.rate_floor;
    const double gamma = inst.gamma;

    // Strictly feasible start: a shared isotropic floor plus channel-aligned
    // power in R_C sized so both slacks stay off zero for any c_rate < 1.
    const double a0 = (1.0 - c_rate) / (16.0 * n * (1.0 + gamma));
    const double b0 = c_rate + (gamma - 1.0) * a0 + 0.25 * (1.0 - c_rate);

    VectorXd xi(2 * nn);
    xi.head(nn) = herm_to_vec(a0 * eye + b0 * hh);
    xi.tail(nn) = herm_to_vec(a0 * eye);

    auto evaluate = [&](const VectorXd& x) {
        BarrierPoint pt;
        pt.rc = vec_to_herm(x.head(nn), n);
        pt.rs = vec_to_herm(x.tail(nn), n);
        Eigen::LLT<MatrixXcd> lc(pt.rc), ls(pt.rs);
        if (lc.info() != Eigen::Success || ls.info() != Eigen::Success) return pt;
        pt.slack_rate = std::real((hh * pt.rc).trace()) -
                        gamma * std::real((hh * pt.rs).trace()) - c_rate;
        pt.slack_power = 1.0 - std::real(pt.rc.trace()) - std::real(pt.rs.trace());
        if (pt.slack_rate <= 0.0 || pt.slack_power <= 0.0) return pt;
        pt.logdet_rc = 2.0 * lc.matrixLLT().diagonal().real().array().log().sum();
        pt.logdet_rs = 2.0 * ls.matrixLLT().diagonal().real().array().log().sum();
        pt.rc_inv = lc.solve(eye);
        pt.rs_inv = ls.solve(eye);
        pt.mom = moments(inst, pt.rc + pt.rs);
        pt.ok = pt.mom.v > 0.0;
        return pt;
    };
    auto gain_at = [&](const BarrierPoint& pt) {
        return pt.mom.x - std::norm(pt.mom.u) / pt.mom.v;
    };
    auto phi = [&](const BarrierPoint& pt, double tau) {
        return -tau * gain_at(pt) - pt.logdet_rc - pt.logdet_rs -
               std::log(pt.slack_rate) - std::log(pt.slack_power);
    };

    // Fixed pieces of the gradient/Hessian assembly.
    const VectorXd j_ur = herm_to_vec(h2re);
    const VectorXd j_ui = herm_to_vec(h2im);
    const VectorXd j_v = herm_to_vec(inst.a3);
    const VectorXd vec_hh = herm_to_vec(hh);
    const VectorXd vec_eye = herm_to_vec(eye);
    MatrixXd jac(3, nn);
    jac.row(0) = j_ur.transpose();
    jac.row(1) = j_ui.transpose();
    jac.row(2) = j_v.transpose();

    BarrierPoint cur = evaluate(xi);
    if (!cur.ok) throw SolverError("barrier start point infeasible", "numerical");

    const double nu = 2.0 * n + 2.0;  // total barrier parameter
    double tau = 1.0;
    const int max_centerings = 40;
    for (int round = 0; round < max_centerings; ++round) {
        for (int it = 0; it < 80; ++it) {
            // Gradient.
            const double ur = std::real(cur.mom.u), ui = std::imag(cur.mom.u);
            const double v = cur.mom.v;
            const cxd zstar = -cur.mom.u / v;
            const VectorXd grad_g = herm_to_vec(d_of_z(inst, zstar));
            VectorXd grad(2 * nn);
            grad.head(nn) = -tau * grad_g - herm_to_vec(cur.rc_inv) -
                            vec_hh / cur.slack_rate + vec_eye / cur.slack_power;
            grad.tail(nn) = -tau * grad_g - herm_to_vec(cur.rs_inv) +
                            gamma * vec_hh / cur.slack_rate + vec_eye / cur.slack_power;
            // Hessian.
            Eigen::Matrix3d hf;
            hf << 2.0 / v, 0.0, -2.0 * ur / (v * v),
                  0.0, 2.0 / v, -2.0 * ui / (v * v),
                  -2.0 * ur / (v * v), -2.0 * ui / (v * v),
                  2.0 * (ur * ur + ui * ui) / (v * v * v);
            const MatrixXd obj_block = tau * jac.transpose() * hf * jac;
            MatrixXd hess(2 * nn, 2 * nn);
            hess.topLeftCorner(nn, nn) = obj_block + hess_logdet(cur.rc_inv);
            hess.bottomRightCorner(nn, nn) = obj_block + hess_logdet(cur.rs_inv);
            hess.topRightCorner(nn, nn) = obj_block;
            hess.bottomLeftCorner(nn, nn) = obj_block;
            VectorXd grad_rate(2 * nn), grad_power(2 * nn);
            grad_rate.head(nn) = vec_hh;
            grad_rate.tail(nn) = -gamma * vec_hh;
            grad_power.head(nn) = -vec_eye;
            grad_power.tail(nn) = -vec_eye;
            hess += grad_rate * grad_rate.transpose() / (cur.slack_rate * cur.slack_rate);
            hess += grad_power * grad_power.transpose() /
                    (cur.slack_power * cur.slack_power);
            hess.diagonal().array() += 1e-12 * hess.diagonal().maxCoeff();

            Eigen::LDLT<MatrixXd> ldlt(hess);
            const VectorXd step = ldlt.solve(-grad);
            const double decrement2 = -grad.dot(step);
            if (!(decrement2 > 0.0)) break;  // numerically flat
            if (decrement2 * 0.5 < 1e-11) break;

            double t = 1.0;
            const double phi_cur = phi(cur, tau);
            BarrierPoint next;
            while (t > 1e-12) {
                next = evaluate(xi + t * step);
                if (next.ok && phi(next, tau) <= phi_cur - 0.25 * t * decrement2) break;
                t *= 0.5;
            }
            if (t <= 1e-12) break;  // stalled line search
            xi += t * step;
            cur = next;
        }
        const double gap_bound = nu / tau;
        if (gap_bound <= rel_gap * std::max(std::abs(gain_at(cur)), 1e-12)) break;
        tau *= 10.0;
    }
    return gain_at(cur);
}

}  // namespace isac
