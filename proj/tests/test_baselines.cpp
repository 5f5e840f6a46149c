#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>

#include "isac/baselines.hpp"
#include "isac/beamopt.hpp"
#include "isac/fisher.hpp"
#include "isac/prior.hpp"
#include "scenario_fixture.hpp"

using Eigen::VectorXcd;
using isac::BeamSolution;
using isac::ConvexInstance;
using isac::KktCase;

namespace {

ConvexInstance instance_at(double rate) {
    const Scenario& sc = scenario();
    return isac::build_instance(sc.matrices, sc.h, rate, sc.power, sc.sigma_c2);
}

BeamSolution proposed_at(double rate) {
    const Scenario& sc = scenario();
    const auto inst = instance_at(rate);
    const auto rel = isac::solve_relaxation(inst);
    const auto cert = isac::recover_certificate(inst, rel);
    return isac::purify(inst, rel, cert, sc.matrices, sc.link);
}

double total_power(const BeamSolution& b) {
    double p = b.w.squaredNorm();
    for (const auto& s : b.sensing) p += s.squaredNorm();
    return p;
}

}  // namespace

TEST_CASE("sensing-only design spends the budget on one beam") {
    const Scenario& sc = scenario();
    const auto inst = instance_at(4.0);
    const auto b1 = isac::sensing_oriented(inst, sc.matrices, sc.link);

    CHECK(b1.w.norm() == 0.0);
    REQUIRE(b1.sensing.size() == 1);
    CHECK(b1.sensing[0].squaredNorm() == doctest::Approx(sc.power).epsilon(1e-10));
    CHECK(b1.case_label == KktCase::I);

    // Decoding the sensing beam gives the user a fixed low rate, well under
    // the channel capacity and identical for every rate target.
    CHECK(b1.rate > 1.911);
    CHECK(b1.rate < 1.950);
    CHECK(b1.rate < 0.25 * sc.capacity);
    const auto again = isac::sensing_oriented(instance_at(7.0), sc.matrices, sc.link);
    CHECK(again.rate == doctest::Approx(b1.rate).epsilon(1e-12));
}

TEST_CASE("no-dedicated-beam design meets rate with a single beam") {
    const Scenario& sc = scenario();
    for (double rate : {2.0, 6.0}) {
        const auto inst = instance_at(rate);
        const auto b2 = isac::dual_functional(inst, sc.matrices, sc.link);
        CHECK(b2.sensing.empty());
        CHECK(total_power(b2) <= sc.power * (1.0 + 1e-8));
        CHECK(b2.rate >= rate - 1e-6);
        CHECK(b2.pcrb > 0.0);
        CHECK(b2.pcrb < 2.0);
    }
}

TEST_CASE("no-dedicated-beam design matches the proposed one near capacity") {
    const Scenario& sc = scenario();
    const double rate = 0.97 * sc.capacity;
    const auto b2 = isac::dual_functional(instance_at(rate), sc.matrices, sc.link);
    const auto prop = proposed_at(rate);
    // Both are single-beam solutions of the same restricted problem there.
    CHECK(prop.sensing.empty());
    CHECK(b2.pcrb == doctest::Approx(prop.pcrb).epsilon(1e-6));
    CHECK(b2.tight_rel < 1e-6);
}

TEST_CASE("mode-planned design scores under the true prior") {
    const Scenario& sc = scenario();

    // The sharper component owns the mode.
    const double mode = isac::argmax_pdf(sc.prior);
    CHECK(std::abs(mode - (-1.2)) < 1e-3);

    // Point matrices at the mode keep the steering orthogonality.
    const auto planning = isac::point_mass_matrices(sc.geom, sc.target, mode);
    const VectorXcd q = isac::steering_tx(sc.geom, sc.target, mode) /
                        std::sqrt(static_cast<double>(sc.geom.num_tx()));
    CHECK(std::abs((planning.a2 * q * q.adjoint()).trace()) < 1e-10);

    const auto inst = instance_at(4.0);
    const auto b3 =
        isac::most_probable_angle(inst, sc.geom, sc.target, sc.prior, sc.matrices, sc.link);
    CHECK(total_power(b3) <= sc.power * (1.0 + 1e-8));
    CHECK(b3.rate >= 4.0 - 1e-9);
    CHECK(b3.pcrb > 0.0);
}

TEST_CASE("benchmark ordering brackets the proposed design") {
    const Scenario& sc = scenario();
    for (double rate : {2.0, 4.0, 6.5}) {
        const auto inst = instance_at(rate);
        const auto prop = proposed_at(rate);
        const auto b1 = isac::sensing_oriented(inst, sc.matrices, sc.link);
        const auto b2 = isac::dual_functional(inst, sc.matrices, sc.link);
        const auto b3 = isac::most_probable_angle(inst, sc.geom, sc.target, sc.prior,
                                                  sc.matrices, sc.link);
        CHECK(b1.pcrb <= prop.pcrb + 1e-8);
        CHECK(prop.pcrb <= b2.pcrb + 1e-8);
        CHECK(prop.pcrb <= b3.pcrb + 1e-8);
        for (const auto* b : {&prop, &b1, &b2, &b3}) {
            CHECK(total_power(*b) <= sc.power * (1.0 + 1e-8));
        }
    }
}
