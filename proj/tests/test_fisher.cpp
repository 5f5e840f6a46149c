#include <doctest.h>

#include <cmath>
#include <random>

#include "isac/fisher.hpp"

using namespace isac;

namespace {

const UpaGeometry kGeom{4, 4, 4, 5, 0.5, 10.0};

VonMisesMixture scenario_mixture() {
    return VonMisesMixture{{{-1.2, 300.0, 0.54}, {-0.6, 80.0, 0.46}}};
}

const SensingMatrices& scenario_matrices() {
    static const SensingMatrices m =
        assemble_matrices(kGeom, SceneAngles::for_target(kGeom, 100.0), scenario_mixture());
    return m;
}

Eigen::MatrixXcd random_psd(int n, std::mt19937_64& rng, double trace_target) {
    std::normal_distribution<double> g;
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = cxd(g(rng), g(rng));
    Eigen::MatrixXcd r = m * m.adjoint();
    return r * (trace_target / std::real(r.trace()));
}

}  // namespace

TEST_CASE("prior-averaged matrices satisfy their structural identities") {
    const auto& m = scenario_matrices();
    const double nrnt = 20.0 * 16.0;
    CHECK(std::real(m.a3.trace()) == doctest::Approx(nrnt).epsilon(1e-8));
    CHECK(std::abs(std::imag(m.a3.trace())) < 1e-10);
    CHECK(std::abs(m.a2.trace()) <= 1e-8 * nrnt);
    CHECK((m.a1 - m.a1.adjoint()).norm() == 0.0);
    CHECK((m.a3 - m.a3.adjoint()).norm() == 0.0);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e1(m.a1), e3(m.a3);
    CHECK(e1.eigenvalues().minCoeff() >= -1e-9 * std::real(m.a1.trace()));
    CHECK(e3.eigenvalues().minCoeff() >= -1e-9 * nrnt);
    CHECK(m.num_rx == 20);
    CHECK(m.prior_fisher == doctest::Approx(197.02027288572866).epsilon(1e-9));
}

TEST_CASE("sharply concentrated prior reproduces the point-target matrices") {
    const double th0 = -0.9;
    const auto target = SceneAngles::for_target(kGeom, 100.0);
    const VonMisesMixture sharp{{{th0, 1e6, 1.0}}};
    QuadratureControl ctl;
    ctl.initial_nodes = 1 << 14;
    const auto q = assemble_matrices(kGeom, target, sharp, ctl);
    const auto p = point_mass_matrices(kGeom, target, th0);
    CHECK((q.a1 - p.a1).norm() <= 1e-3 * p.a1.norm());
    CHECK((q.a2 - p.a2).norm() <= 1e-3 * p.a2.norm());
    CHECK((q.a3 - p.a3).norm() <= 1e-3 * p.a3.norm());
}

TEST_CASE("closed-form bound equals explicit 3x3 information inversion") {
    const auto& m = scenario_matrices();
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> mag(0.5, 2.0), phase(-M_PI, M_PI),
        noise(0.1, 10.0), pf(0.02, 5.0), tr(0.1, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        SensingMatrices mm = m;
        mm.prior_fisher = pf(rng);
        SensingLinkBudget link;
        link.alpha = std::polar(mag(rng), phase(rng));
        link.symbols = 1 + static_cast<int>(rng() % 50);
        link.noise_var = noise(rng);
        const Eigen::MatrixXcd rx = random_psd(16, rng, tr(rng));

        const auto fb = fim_blocks(mm, link, rx);
        Eigen::Matrix3d F;
        F(0, 0) = fb.j_theta_theta + mm.prior_fisher;
        F.block<1, 2>(0, 1) = fb.j_theta_alpha;
        F.block<2, 1>(1, 0) = fb.j_theta_alpha.transpose();
        F.block<2, 2>(1, 1) = fb.j_alpha_alpha * Eigen::Matrix2d::Identity();
        const double v11 = F.inverse()(0, 0);
        const double ref = 2.0 - 2.0 / std::sqrt(1.0 + v11);

        CHECK(pcrb_periodic(mm, link, rx) == doctest::Approx(ref).epsilon(1e-10));
    }
}

TEST_CASE("bound reduces to the prior term for zero illumination") {
    const auto& m = scenario_matrices();
    SensingLinkBudget link;
    link.alpha = cxd(1e-3, 0.0);
    link.symbols = 25;
    link.noise_var = 1e-12;
    SensingMatrices mm = m;
    mm.prior_fisher = 4.0;
    const Eigen::MatrixXcd zero = Eigen::MatrixXcd::Zero(16, 16);
    CHECK(pcrb_periodic(mm, link, zero) ==
          doctest::Approx(2.0 - 2.0 / std::sqrt(1.0 + 0.25)).epsilon(1e-14));
    mm.prior_fisher = 0.0;
    CHECK_THROWS_AS(pcrb_periodic(mm, link, zero), std::domain_error);
}

TEST_CASE("periodic bound never exceeds the unwrapped variance bound") {
    for (double v = 1e-8; v < 1e4; v *= 3.7) {
        CHECK(2.0 - 2.0 / std::sqrt(1.0 + v) <= v);
    }
}

TEST_CASE("sensing gain is nonnegative on the PSD cone") {
    const auto& m = scenario_matrices();
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 25; ++trial) {
        const auto rx = random_psd(16, rng, 1.0 + trial * 0.3);
        CHECK(sensing_gain(m, rx) >= -1e-12 * m.a1.norm() * rx.norm());
    }
}

TEST_CASE("aligned rank-one power never worsens the bound") {
    const auto target = SceneAngles::for_target(kGeom, 100.0);
    SensingLinkBudget link;
    link.alpha = cxd(8e-7, 0.0);
    link.symbols = 25;
    link.noise_var = 1e-12;

    // point prior: the steering vector itself satisfies tr(A2 q q^H) = 0
    const auto pm = point_mass_matrices(kGeom, target, -0.9);
    const Eigen::VectorXcd q0 = steering_tx(kGeom, target, -0.9).normalized();
    CHECK(std::abs(cxd(q0.adjoint() * pm.a2 * q0)) < 1e-12 * pm.a2.norm());

    // mixture prior: build q with q^H A2 q = 0 from the eigenstructure of the
    // Hermitian and anti-Hermitian parts of A2
    const auto& m = scenario_matrices();
    const Eigen::MatrixXcd h2re = 0.5 * (m.a2 + m.a2.adjoint());
    const Eigen::MatrixXcd h2im = cxd(0, -0.5) * (m.a2 - m.a2.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h2re);
    Eigen::VectorXcd q_mix;
    bool found = false;
    const int n = 16;
    for (int ip = n - 1; ip >= 0 && !found; --ip) {
        if (es.eigenvalues()(ip) <= 0.0) continue;
        for (int in = 0; in < n && !found; ++in) {
            if (es.eigenvalues()(in) >= 0.0) continue;
            const double lp = es.eigenvalues()(ip), ln = es.eigenvalues()(in);
            const double psi = std::atan(std::sqrt(lp / -ln));
            const double cp = std::cos(psi), cn = std::sin(psi);
            const Eigen::VectorXcd vp = es.eigenvectors().col(ip);
            const Eigen::VectorXcd vn = es.eigenvectors().col(in);
            const double base = cp * cp * std::real(cxd(vp.adjoint() * h2im * vp)) +
                                cn * cn * std::real(cxd(vn.adjoint() * h2im * vn));
            const cxd w = cxd(vp.adjoint() * h2im * vn);
            const double amp = 2.0 * cp * cn * std::abs(w);
            if (std::abs(base) > amp || amp == 0.0) continue;
            const double delta = std::acos(std::clamp(-base / amp, -1.0, 1.0));
            const double phi = -std::arg(w) + delta;
            q_mix = (cp * vp + cn * std::polar(1.0, phi) * vn).normalized();
            found = true;
        }
    }
    REQUIRE(found);
    CHECK(std::abs(cxd(q_mix.adjoint() * m.a2 * q_mix)) < 1e-8 * m.a2.norm());

    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 8; ++trial) {
        const auto r0 = random_psd(16, rng, 0.01);
        double prev_pm = pcrb_periodic(pm, link, r0);
        double prev_mix = pcrb_periodic(m, link, r0);
        for (double c : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2}) {
            const double cur_pm =
                pcrb_periodic(pm, link, r0 + c * (q0 * q0.adjoint()));
            const double cur_mix =
                pcrb_periodic(m, link, r0 + c * (q_mix * q_mix.adjoint()));
            CHECK(cur_pm <= prev_pm + 1e-14);
            CHECK(cur_mix <= prev_mix + 1e-12);
            prev_pm = cur_pm;
            prev_mix = cur_mix;
        }
    }
}

TEST_CASE("link budget coefficient arithmetic") {
    SensingLinkBudget link;
    link.alpha = std::sqrt(6.339572769844455e-13);
    link.symbols = 25;
    link.noise_var = 1e-12;
    CHECK(link.gain_coeff() == doctest::Approx(31.697863849222266).epsilon(1e-12));
}
