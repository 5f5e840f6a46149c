#include "isac/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace isac::sdp {

std::string to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::max_iters: return "max_iters";
        case Status::stalled: return "stalled";
        case Status::numerical: return "numerical";
    }
    return "unknown";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Scaling {
    MatrixXd g, gi;   // W = g g^T, g gi = I
    VectorXd sigma;   // scaled-space spectrum, X = g diag(sigma) g^T
    MatrixXd lx, lz;  // Cholesky factors of X and Z
    bool ok = false;
};

Scaling nt_scaling(const MatrixXd& x, const MatrixXd& z) {
    Scaling s;
    Eigen::LLT<MatrixXd> cx(x), cz(z);
    if (cx.info() != Eigen::Success || cz.info() != Eigen::Success) return s;
    s.lx = cx.matrixL();
    s.lz = cz.matrixL();
    Eigen::JacobiSVD<MatrixXd> svd(s.lz.transpose() * s.lx,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
    s.sigma = svd.singularValues();
    if (s.sigma.minCoeff() <= 0.0) return s;
    const VectorXd si = s.sigma.cwiseSqrt().cwiseInverse();
    s.g = s.lx * svd.matrixV() * si.asDiagonal();
    s.gi = si.asDiagonal() * svd.matrixU().transpose() * s.lz.transpose();
    s.ok = true;
    return s;
}

// Largest step alpha with M + alpha * dM staying PSD, via the spectrum of
// L^-1 dM L^-T for the Cholesky factor L of M.
double step_to_boundary(const MatrixXd& l, const MatrixXd& dm) {
    MatrixXd s = l.triangularView<Eigen::Lower>().solve(dm);
    s = l.triangularView<Eigen::Lower>().solve(s.transpose()).transpose();
    s = 0.5 * (s + s.transpose().eval());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(s, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    return lmin < -1e-14 ? -1.0 / lmin : kInf;
}

struct State {
    std::vector<MatrixXd> x, z;
    VectorXd y, u;
};

}  // namespace

Result solve(const Problem& prob, const Options& opts) {
    const int m = prob.num_rows();
    const int nb = prob.num_blocks();
    const int nf = prob.num_free();
    if (static_cast<int>(prob.rows.size()) != m)
        throw std::invalid_argument("constraint row count does not match rhs length");
    if (nf > 0 && (prob.free_coeff.rows() != m || prob.free_coeff.cols() != nf))
        throw std::invalid_argument("free-variable coefficient shape mismatch");

    auto block_or_zero = [&](const std::vector<MatrixXd>& v, int j) -> MatrixXd {
        const int d = prob.block_dims[j];
        if (j < static_cast<int>(v.size()) && v[j].size() > 0) {
            if (v[j].rows() != d || v[j].cols() != d)
                throw std::invalid_argument("block dimension mismatch in problem data");
            return 0.5 * (v[j] + v[j].transpose().eval());
        }
        return MatrixXd::Zero(d, d);
    };

    std::vector<MatrixXd> cost(nb);
    std::vector<std::vector<MatrixXd>> rows(m, std::vector<MatrixXd>(nb));
    for (int j = 0; j < nb; ++j) cost[j] = block_or_zero(prob.cost, j);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < nb; ++j) rows[i][j] = block_or_zero(prob.rows[i], j);

    int ndim = 0;
    for (int d : prob.block_dims) ndim += d;

    double data_scale = 1.0;
    for (int j = 0; j < nb; ++j) {
        data_scale = std::max(data_scale, cost[j].norm());
        for (int i = 0; i < m; ++i) data_scale = std::max(data_scale, rows[i][j].norm());
    }
    const double bnorm = 1.0 + prob.rhs.norm();
    const double cnorm = 1.0 + data_scale;

    State st;
    st.x.resize(nb);
    st.z.resize(nb);
    for (int j = 0; j < nb; ++j) {
        st.x[j] = (1.0 + prob.rhs.lpNorm<Eigen::Infinity>()) *
                  MatrixXd::Identity(prob.block_dims[j], prob.block_dims[j]);
        st.z[j] = data_scale * MatrixXd::Identity(prob.block_dims[j], prob.block_dims[j]);
    }
    st.y = VectorXd::Zero(m);
    st.u = VectorXd::Zero(nf);

    Result best;
    double best_merit = kInf;

    auto evaluate = [&](const State& s, Result& r) {
        VectorXd rp = prob.rhs;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < nb; ++j) rp(i) -= rows[i][j].cwiseProduct(s.x[j]).sum();
            if (nf > 0) rp(i) -= prob.free_coeff.row(i).dot(s.u);
        }
        double dres2 = 0.0;
        double gap_inner = 0.0;
        double pobj = 0.0;
        for (int j = 0; j < nb; ++j) {
            MatrixXd rd = cost[j] - s.z[j];
            for (int i = 0; i < m; ++i) rd -= s.y(i) * rows[i][j];
            dres2 += rd.squaredNorm();
            gap_inner += s.x[j].cwiseProduct(s.z[j]).sum();
            pobj += cost[j].cwiseProduct(s.x[j]).sum();
        }
        if (nf > 0) {
            const VectorXd rf = prob.free_cost - prob.free_coeff.transpose() * s.y;
            dres2 += rf.squaredNorm();
            pobj += prob.free_cost.dot(s.u);
        }
        const double dobj = prob.rhs.dot(s.y);
        r.primal_obj = pobj;
        r.dual_obj = dobj;
        r.primal_infeas = rp.norm() / bnorm;
        r.dual_infeas = std::sqrt(dres2) / cnorm;
        r.gap_rel = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        return std::make_pair(rp, gap_inner);
    };

    Result cur;
    int it = 0;
    int stall_count = 0;
    double prev_merit = kInf;

    for (; it < opts.max_iters; ++it) {
        auto [rp, gap_inner] = evaluate(st, cur);
        const double mu = gap_inner / ndim;
        const double merit = std::max({cur.primal_infeas, cur.dual_infeas, cur.gap_rel});

        if (merit < best_merit) {
            best_merit = merit;
            best = cur;
            best.x = st.x;
            best.z = st.z;
            best.y = st.y;
            best.u = st.u;
            best.iters = it;
        }
        if (opts.trace)
            std::fprintf(stderr, "it=%3d mu=%10.3e pinf=%9.2e dinf=%9.2e gap=%9.2e\n", it, mu,
                         cur.primal_infeas, cur.dual_infeas, cur.gap_rel);

        if (cur.primal_infeas <= opts.tol_feas && cur.dual_infeas <= opts.tol_feas &&
            cur.gap_rel <= opts.tol_gap) {
            best = cur;
            best.x = st.x;
            best.z = st.z;
            best.y = st.y;
            best.u = st.u;
            best.status = Status::optimal;
            best.iters = it;
            return best;
        }
        stall_count = merit > 0.95 * prev_merit ? stall_count + 1 : 0;
        prev_merit = merit;
        if (stall_count >= 8) {
            best.status = Status::stalled;
            return best;
        }

        // dual residual blocks
        std::vector<MatrixXd> rd(nb);
        for (int j = 0; j < nb; ++j) {
            rd[j] = cost[j] - st.z[j];
            for (int i = 0; i < m; ++i) rd[j] -= st.y(i) * rows[i][j];
        }
        VectorXd rf = VectorXd::Zero(nf);
        if (nf > 0) rf = prob.free_cost - prob.free_coeff.transpose() * st.y;

        // NT scaling and the normal matrix
        std::vector<Scaling> sc(nb);
        bool scaling_ok = true;
        for (int j = 0; j < nb; ++j) {
            sc[j] = nt_scaling(st.x[j], st.z[j]);
            scaling_ok = scaling_ok && sc[j].ok;
        }
        if (!scaling_ok) {
            best.status = Status::numerical;
            return best;
        }

        std::vector<std::vector<MatrixXd>> atil(m, std::vector<MatrixXd>(nb));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < nb; ++j)
                atil[i][j] = sc[j].g.transpose() * rows[i][j] * sc[j].g;

        MatrixXd kkt = MatrixXd::Zero(m + nf, m + nf);
        for (int i = 0; i < m; ++i)
            for (int k = i; k < m; ++k) {
                double v = 0.0;
                for (int j = 0; j < nb; ++j) v += atil[i][j].cwiseProduct(atil[k][j]).sum();
                kkt(i, k) = kkt(k, i) = v;
            }
        if (nf > 0) {
            kkt.topRightCorner(m, nf) = prob.free_coeff;
            kkt.bottomLeftCorner(nf, m) = prob.free_coeff.transpose();
        }
        Eigen::FullPivLU<MatrixXd> lu(kkt);
        if (!lu.isInvertible()) {
            // tiny diagonal regularisation keeps the search usable near the
            // boundary where the normal matrix goes singular
            Eigen::FullPivLU<MatrixXd> lu2(
                kkt + 1e-13 * kkt.norm() * MatrixXd::Identity(m + nf, m + nf));
            lu = lu2;
        }

        std::vector<MatrixXd> rdtil(nb);
        VectorXd aw = VectorXd::Zero(m);
        for (int j = 0; j < nb; ++j) {
            rdtil[j] = sc[j].g.transpose() * rd[j] * sc[j].g;
            for (int i = 0; i < m; ++i) aw(i) += atil[i][j].cwiseProduct(rdtil[j]).sum();
        }

        auto newton = [&](const std::vector<MatrixXd>& tc, VectorXd& dy, VectorXd& du,
                          std::vector<MatrixXd>& dx, std::vector<MatrixXd>& dz) {
            VectorXd rhs(m + nf);
            for (int i = 0; i < m; ++i) {
                double at = 0.0;
                for (int j = 0; j < nb; ++j) at += rows[i][j].cwiseProduct(tc[j]).sum();
                rhs(i) = rp(i) - at + aw(i);
            }
            rhs.tail(nf) = rf;
            VectorXd sol = lu.solve(rhs);
            sol += lu.solve(rhs - kkt * sol);  // one refinement pass
            dy = sol.head(m);
            du = sol.tail(nf);
            dx.resize(nb);
            dz.resize(nb);
            for (int j = 0; j < nb; ++j) {
                dz[j] = rd[j];
                for (int i = 0; i < m; ++i) dz[j] -= dy(i) * rows[i][j];
                const MatrixXd mid = sc[j].g.transpose() * dz[j] * sc[j].g;
                dx[j] = tc[j] - sc[j].g * mid * sc[j].g.transpose();
                dx[j] = 0.5 * (dx[j] + dx[j].transpose().eval());
            }
        };

        // predictor (affine scaling step)
        std::vector<MatrixXd> tc(nb);
        for (int j = 0; j < nb; ++j) tc[j] = -st.x[j];
        VectorXd dy, du;
        std::vector<MatrixXd> dx, dz;
        newton(tc, dy, du, dx, dz);

        double ap = 1.0, ad = 1.0;
        for (int j = 0; j < nb; ++j) {
            ap = std::min(ap, step_to_boundary(sc[j].lx, dx[j]));
            ad = std::min(ad, step_to_boundary(sc[j].lz, dz[j]));
        }
        double gap_aff = 0.0;
        for (int j = 0; j < nb; ++j)
            gap_aff += (st.x[j] + ap * dx[j]).cwiseProduct(st.z[j] + ad * dz[j]).sum();
        gap_aff = std::max(gap_aff, 0.0);
        double sigma = std::pow(gap_aff / std::max(gap_inner, 1e-300), 3.0);
        sigma = std::clamp(sigma, 1e-10, 1.0);

        // corrector with the Mehrotra second-order term
        for (int j = 0; j < nb; ++j) {
            const MatrixXd dxs = sc[j].gi * dx[j] * sc[j].gi.transpose();
            const MatrixXd dzs = sc[j].g.transpose() * dz[j] * sc[j].g;
            MatrixXd rc = -0.5 * (dxs * dzs + dzs * dxs);
            rc.diagonal() -= sc[j].sigma.cwiseAbs2();
            rc.diagonal().array() += sigma * mu;
            const auto& sg = sc[j].sigma;
            for (int p = 0; p < rc.rows(); ++p)
                for (int q = 0; q < rc.cols(); ++q) rc(p, q) *= 2.0 / (sg(p) + sg(q));
            tc[j] = sc[j].g * rc * sc[j].g.transpose();
            tc[j] = 0.5 * (tc[j] + tc[j].transpose().eval());
        }
        newton(tc, dy, du, dx, dz);

        ap = kInf;
        ad = kInf;
        for (int j = 0; j < nb; ++j) {
            ap = std::min(ap, step_to_boundary(sc[j].lx, dx[j]));
            ad = std::min(ad, step_to_boundary(sc[j].lz, dz[j]));
        }
        ap = std::min(1.0, opts.step_frac * ap);
        ad = std::min(1.0, opts.step_frac * ad);

        for (int j = 0; j < nb; ++j) {
            st.x[j] += ap * dx[j];
            st.z[j] += ad * dz[j];
        }
        st.y += ad * dy;
        st.u += ap * du;
    }

    best.status = Status::max_iters;
    return best;
}

}  // namespace isac::sdp
