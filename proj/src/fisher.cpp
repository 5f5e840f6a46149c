#include "isac/fisher.hpp"

#include <cmath>
#include <stdexcept>

namespace isac {

namespace {

struct MatrixTriple {
    Eigen::MatrixXcd a1, a2, a3;
    double norm() const { return std::sqrt(a1.squaredNorm() + a2.squaredNorm() + a3.squaredNorm()); }
};

}  // namespace

SensingMatrices assemble_matrices(const UpaGeometry& g, const SceneAngles& target,
                                  const VonMisesMixture& prior, const QuadratureControl& ctl) {
    g.validate();
    const int nt = g.num_tx();
    const double nr = g.num_rx();

    auto eval = [&](int n) {
        MatrixTriple t;
        t.a1 = Eigen::MatrixXcd::Zero(nt, nt);
        t.a2 = Eigen::MatrixXcd::Zero(nt, nt);
        t.a3 = Eigen::MatrixXcd::Zero(nt, nt);
        const double h = 2.0 * M_PI / n;
        for (int i = 0; i < n; ++i) {
            const double th = -M_PI + i * h;
            const double w = pdf(prior, th) * h;
            if (w == 0.0) continue;
            const Eigen::VectorXcd a = steering_tx(g, target, th);
            const Eigen::VectorXcd da = steering_tx_deriv(g, target, th);
            const double db2 = steering_rx_deriv(g, target, th).squaredNorm();
            t.a1.noalias() += (w * db2) * (a * a.adjoint()) + (w * nr) * (da * da.adjoint());
            t.a2.noalias() += (w * nr) * (da * a.adjoint());
            t.a3.noalias() += (w * nr) * (a * a.adjoint());
        }
        return t;
    };
    auto dist = [](const MatrixTriple& cur, const MatrixTriple& prev) {
        MatrixTriple d{cur.a1 - prev.a1, cur.a2 - prev.a2, cur.a3 - prev.a3};
        return d.norm() / std::max(1e-30, cur.norm());
    };

    SensingMatrices out;
    MatrixTriple t = refine_periodic<MatrixTriple>(eval, dist, ctl, "prior-averaged matrices",
                                                   &out.quadrature_nodes);
    out.a1 = 0.5 * (t.a1 + t.a1.adjoint().eval());
    out.a2 = std::move(t.a2);
    out.a3 = 0.5 * (t.a3 + t.a3.adjoint().eval());
    out.num_rx = g.num_rx();
    out.prior_fisher = score_energy(prior, ctl);
    return out;
}

SensingMatrices point_mass_matrices(const UpaGeometry& g, const SceneAngles& target,
                                    double theta) {
    g.validate();
    const double nr = g.num_rx();
    const Eigen::VectorXcd a = steering_tx(g, target, theta);
    const Eigen::VectorXcd da = steering_tx_deriv(g, target, theta);
    const double db2 = steering_rx_deriv(g, target, theta).squaredNorm();
    SensingMatrices out;
    out.a1 = db2 * (a * a.adjoint()) + nr * (da * da.adjoint());
    out.a2 = nr * (da * a.adjoint());
    out.a3 = nr * (a * a.adjoint());
    out.prior_fisher = 0.0;
    out.num_rx = g.num_rx();
    out.quadrature_nodes = 0;
    return out;
}

double sensing_gain(const SensingMatrices& m, const Eigen::MatrixXcd& rx) {
    const double x = std::real((m.a1 * rx).trace());
    const cxd u = (m.a2 * rx).trace();
    const double v = std::real((m.a3 * rx).trace());
    const double scale = std::real(m.a3.trace()) * rx.norm();
    if (v <= scale * 1e-15) {
        if (rx.norm() == 0.0) return 0.0;
        throw std::domain_error("sensing gain undefined: tr(A3 R) is not positive");
    }
    return x - std::norm(u) / v;
}

double pcrb_from_gain(double gain, double prior_fisher, double gain_coeff) {
    const double info = prior_fisher + gain_coeff * gain;
    if (!(info > 0.0))
        throw std::domain_error("total Fisher information is not positive; bound undefined");
    const double v = 1.0 / info;
    return 2.0 - 2.0 / std::sqrt(1.0 + v);
}

double pcrb_periodic(const SensingMatrices& m, const SensingLinkBudget& link,
                     const Eigen::MatrixXcd& rx) {
    return pcrb_from_gain(sensing_gain(m, rx), m.prior_fisher, link.gain_coeff());
}

FimBlocks fim_blocks(const SensingMatrices& m, const SensingLinkBudget& link,
                     const Eigen::MatrixXcd& rx) {
    const double c = 2.0 * link.symbols / link.noise_var;
    const cxd u = (m.a2 * rx).trace();
    FimBlocks f;
    f.j_theta_theta = c * link.alpha_mag2() * std::real((m.a1 * rx).trace());
    const cxd ua = u * link.alpha;
    f.j_theta_alpha << c * std::real(ua), c * std::real(ua * cxd(0.0, 1.0));
    f.j_alpha_alpha = c * std::real((m.a3 * rx).trace());
    return f;
}

}  // namespace isac
