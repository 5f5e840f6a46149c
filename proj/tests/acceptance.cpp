// Acceptance gate: ten end-to-end checks with pinned tolerances, one
// PASS/FAIL line each, exit 0 only when all pass.  argv[1] may point at a
// configuration file; the shipped default scenario is assumed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isac/baselines.hpp"
#include "isac/beamopt.hpp"
#include "isac/config.hpp"
#include "isac/fisher.hpp"
#include "isac/geometry.hpp"
#include "isac/mcsim.hpp"
#include "isac/prior.hpp"
#include "isac/sweep.hpp"

using namespace isac;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

// Independent oracle for the prior score energy: dense periodic trapezoid of
// E[(d/dtheta log p)^2] using the analytic component derivative
// p_k' = -kappa_k sin(theta - mu_k) p_k, overflow-safe via scaled Bessel.
double score_energy_grid(const VonMisesMixture& mix, int nodes) {
    const double two_pi = 2.0 * M_PI;
    double acc = 0.0;
    for (int i = 0; i < nodes; ++i) {
        const double theta = -M_PI + two_pi * i / nodes;
        double p = 0.0, dp = 0.0;
        for (const auto& c : mix.components()) {
            const double delta = theta - c.mean;
            const double pk = c.weight *
                              std::exp(c.concentration * (std::cos(delta) - 1.0)) /
                              (two_pi * scaled_bessel_i0(c.concentration));
            p += pk;
            dp += -c.concentration * std::sin(delta) * pk;
        }
        if (p > 0.0) acc += dp * dp / p;
    }
    return acc * two_pi / nodes;
}

// Drop the solve_ms column (index 9) from every CSV line.
std::string strip_timing(const std::string& csv) {
    std::string out;
    std::string field;
    int idx = 0;
    for (const char ch : csv) {
        if (ch == ',') {
            if (idx != 9) out += field + (idx == 10 ? "" : ",");
            field.clear();
            ++idx;
            continue;
        }
        if (ch == '\n') {
            if (idx != 9) out += field;
            out += '\n';
            field.clear();
            idx = 0;
            continue;
        }
        field += ch;
    }
    return out;
}

BeamSolution solve_proposed(const Workspace& ws, const ExperimentConfig& cfg,
                            double rate) {
    const ConvexInstance inst = build_instance(ws.matrices, ws.h, rate,
                                               cfg.power_w(), cfg.noise_comm_w());
    const RelaxedSolution rel = solve_relaxation(inst);
    const Certificate cert = recover_certificate(inst, rel, cfg.tol);
    return purify(inst, rel, cert, ws.matrices, ws.link, cfg.tol);
}

char buf[512];

}  // namespace

int main(int argc, char** argv) {
    const std::string cfg_path = argc > 1 ? argv[1] : "configs/default.json";
    int failed = 0;
    const auto report = [&failed](int id, const char* name, bool pass,
                                  const std::string& detail) {
        std::printf("%s %2d  %-42s %s\n", pass ? "PASS" : "FAIL", id, name,
                    detail.c_str());
        if (!pass) ++failed;
        std::fflush(stdout);
    };

    ExperimentConfig cfg;
    try {
        cfg = load_config(cfg_path);
    } catch (const std::exception& e) {
        std::printf("FAIL  0  configuration                             %s\n",
                    e.what());
        return 1;
    }
    const Workspace ws = make_workspace(cfg);

    // 1: the sensing-oriented benchmark lands on its rate anchor.
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const ConvexInstance inst = build_instance(
            ws.matrices, ws.h, 4.0, cfg.power_w(), cfg.noise_comm_w());
        const BeamSolution b1 = sensing_oriented(inst, ws.matrices, ws.link, cfg.tol);
        const double el = seconds_since(t0);
        const bool pass = b1.rate >= 1.911 && b1.rate <= 1.950 && el <= 10.0;
        std::snprintf(buf, sizeof buf, "rate=%.6f in [1.911,1.950], %.2f s",
                      b1.rate, el);
        report(1, "single-beam benchmark rate anchor", pass, buf);
    } catch (const std::exception& e) {
        report(1, "single-beam benchmark rate anchor", false, e.what());
    }

    // 2+3+4+8 share one full sweep of the shipped scenario.
    std::vector<SweepRow> rows;
    std::string csv_first;
    double sweep_secs = 0.0;
    try {
        const auto t0 = std::chrono::steady_clock::now();
        rows = run_sweep(cfg);
        sweep_secs = seconds_since(t0);
        csv_first = to_csv(rows);
    } catch (const std::exception& e) {
        report(2, "sweep execution", false, e.what());
    }

    std::vector<const SweepRow*> prop;
    for (const auto& r : rows)
        if (r.scheme == "proposed") prop.push_back(&r);

    // 2: every purified point reproduces the relaxed objective, one beam max.
    {
        bool pass = !prop.empty() && sweep_secs <= 300.0;
        double worst_gap = 0.0;
        int max_beams = 0;
        for (const SweepRow* r : prop) {
            pass = pass && r->status == "ok" && r->tight_rel <= 1e-6 &&
                   r->sensing_beams <= 1;
            worst_gap = std::max(worst_gap, r->tight_rel);
            max_beams = std::max(max_beams, r->sensing_beams);
        }
        std::snprintf(buf, sizeof buf,
                      "%zu points, max gap %.2e, max beams %d, %.1f s",
                      prop.size(), worst_gap, max_beams, sweep_secs);
        report(2, "relaxation tightness across the sweep", pass, buf);
    }

    // 3: beam-structure trichotomy along the rate axis.
    {
        bool pass = !prop.empty();
        int split_points = 0;
        if (pass) {
            pass = prop.front()->case_label == "I";
            for (const SweepRow* r : prop) {
                if (r->case_label == "III" && r->sensing_power_frac > 0.01)
                    ++split_points;
            }
            pass = pass && split_points > 0 &&
                   prop.back()->sensing_power_frac == 0.0;
        }
        std::snprintf(buf, sizeof buf,
                      "first=%s, split points=%d, last frac=%.3f",
                      prop.empty() ? "-" : prop.front()->case_label.c_str(),
                      split_points,
                      prop.empty() ? -1.0 : prop.back()->sensing_power_frac);
        report(3, "case structure along the sweep", pass, buf);
    }

    // 4: the proposed design sits between the benchmarks at every point.
    {
        bool pass = !rows.empty();
        double worst = -1.0;
        for (std::size_t i = 0; i < rows.size();) {
            std::size_t j = i;
            const SweepRow *p = nullptr, *b1 = nullptr, *b2 = nullptr,
                           *b3 = nullptr;
            while (j < rows.size() &&
                   rows[j].rate_target == rows[i].rate_target) {
                if (rows[j].scheme == "proposed") p = &rows[j];
                if (rows[j].scheme == "b1") b1 = &rows[j];
                if (rows[j].scheme == "b2") b2 = &rows[j];
                if (rows[j].scheme == "b3") b3 = &rows[j];
                ++j;
            }
            if (!p || !b1 || !b2 || !b3) {
                pass = false;
                break;
            }
            worst = std::max({worst, b1->pcrb - p->pcrb, p->pcrb - b2->pcrb,
                              p->pcrb - b3->pcrb});
            pass = pass && b1->pcrb <= p->pcrb + 1e-8 &&
                   p->pcrb <= b2->pcrb + 1e-8 && p->pcrb <= b3->pcrb + 1e-8;
            i = j;
        }
        std::snprintf(buf, sizeof buf, "worst margin %.2e (<= 1e-8)", worst);
        report(4, "benchmarks bracket the proposed design", pass, buf);
    }

    // 5: closed-form prior information vs a dense-grid oracle.
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const int nodes = 1 << 16;
        double worst = std::abs(score_energy(ws.prior) -
                                score_energy_grid(ws.prior, nodes)) /
                       score_energy_grid(ws.prior, nodes);
        std::mt19937_64 rng(20260815u);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int rep = 0; rep < 50; ++rep) {
            const int k = 1 + static_cast<int>(rng() % 3);
            std::vector<VonMisesComponent> comps(k);
            double wsum = 0.0;
            for (auto& c : comps) {
                c.mean = -M_PI + 2.0 * M_PI * unif(rng);
                c.concentration =
                    std::exp(std::log(0.1) +
                             (std::log(500.0) - std::log(0.1)) * unif(rng));
                c.weight = 0.05 + unif(rng);
                wsum += c.weight;
            }
            for (auto& c : comps) c.weight /= wsum;
            const VonMisesMixture mix(comps);
            const double oracle = score_energy_grid(mix, nodes);
            worst = std::max(worst,
                             std::abs(score_energy(mix) - oracle) / oracle);
        }
        const double el = seconds_since(t0);
        const bool pass = worst <= 1e-6 && el <= 30.0;
        std::snprintf(buf, sizeof buf, "max rel dev %.2e over 51 mixtures, %.1f s",
                      worst, el);
        report(5, "prior information closed form vs grid", pass, buf);
    } catch (const std::exception& e) {
        report(5, "prior information closed form vs grid", false, e.what());
    }

    // 6: moment-matrix identities and steering derivatives.
    try {
        const SensingMatrices& m = ws.matrices;
        const double nrnt = ws.geom.num_rx() * ws.geom.num_tx();
        bool pass = std::abs(m.a3.trace().real() - nrnt) <= 1e-8 * nrnt;
        pass = pass && std::abs(m.a2.trace()) <= 1e-8 * nrnt;
        for (const MatrixXcd* a : {&m.a1, &m.a3}) {
            pass = pass && (*a - a->adjoint()).norm() <= 1e-12 * a->norm();
            Eigen::SelfAdjointEigenSolver<MatrixXcd> es(*a);
            pass = pass &&
                   es.eigenvalues().minCoeff() >= -1e-9 * a->trace().real();
        }
        double dmax = 0.0;
        const double h = 1e-6;
        for (const double theta : {0.3, -1.2, 2.5}) {
            const VectorXcd da = steering_tx_deriv(ws.geom, ws.target, theta);
            const VectorXcd fa = (steering_tx(ws.geom, ws.target, theta + h) -
                                  steering_tx(ws.geom, ws.target, theta - h)) /
                                 (2.0 * h);
            const VectorXcd db = steering_rx_deriv(ws.geom, ws.target, theta);
            const VectorXcd fb = (steering_rx(ws.geom, ws.target, theta + h) -
                                  steering_rx(ws.geom, ws.target, theta - h)) /
                                 (2.0 * h);
            dmax = std::max({dmax, (da - fa).cwiseAbs().maxCoeff(),
                             (db - fb).cwiseAbs().maxCoeff()});
        }
        pass = pass && dmax <= 1e-6;
        std::snprintf(buf, sizeof buf,
                      "tr(A3)=%.6f, |tr(A2)|=%.2e, max deriv dev %.2e",
                      m.a3.trace().real(), std::abs(m.a2.trace()), dmax);
        report(6, "moment-matrix and derivative identities", pass, buf);
    } catch (const std::exception& e) {
        report(6, "moment-matrix and derivative identities", false, e.what());
    }

    // 7: closed-form bound vs explicit 3x3 information inversion.
    try {
        std::mt19937_64 rng(77u);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const int n = ws.geom.num_tx();
        double worst = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            const int k = 1 + rep % 4;
            MatrixXcd b(n, k);
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < k; ++c) b(i, c) = cxd(gauss(rng), gauss(rng));
            MatrixXcd r = b * b.adjoint();
            r *= std::pow(10.0, -4.0 * unif(rng)) / r.trace().real();

            SensingMatrices m = ws.matrices;
            m.prior_fisher = std::pow(10.0, -2.0 + 5.0 * unif(rng));
            SensingLinkBudget link;
            link.alpha = std::polar(std::pow(10.0, -8.0 + 4.0 * unif(rng)),
                                    2.0 * M_PI * unif(rng));
            link.symbols = 1 + static_cast<int>(rng() % 64);
            link.noise_var = std::pow(10.0, -13.0 + 4.0 * unif(rng));

            const FimBlocks jb = fim_blocks(m, link, r);
            Eigen::Matrix3d f = Eigen::Matrix3d::Zero();
            f(0, 0) = jb.j_theta_theta + m.prior_fisher;
            f.block<1, 2>(0, 1) = jb.j_theta_alpha;
            f.block<2, 1>(1, 0) = jb.j_theta_alpha.transpose();
            f(1, 1) = f(2, 2) = jb.j_alpha_alpha;
            const double v = f.inverse()(0, 0);
            const double oracle = 2.0 - 2.0 / std::sqrt(1.0 + v);
            const double closed = pcrb_periodic(m, link, r);
            worst = std::max(worst, std::abs(closed - oracle) /
                                        std::max(oracle, 1e-300));
        }
        const bool pass = worst <= 1e-10;
        std::snprintf(buf, sizeof buf, "max rel dev %.2e over 100 draws", worst);
        report(7, "closed-form bound vs 3x3 inversion", pass, buf);
    } catch (const std::exception& e) {
        report(7, "closed-form bound vs 3x3 inversion", false, e.what());
    }

    // 8: certificate residuals on every solved point; split-case identities.
    try {
        bool pass = !rows.empty();
        double worst_res = 0.0;
        double worst_mu = 0.0, worst_hv = 0.0;
        for (const auto& r : rows) {
            if (r.failed()) {
                pass = false;
                continue;
            }
            worst_res = std::max(worst_res, r.kkt_residual);
            pass = pass && r.kkt_residual <= 1e-5;
        }
        for (const SweepRow* r : prop) {
            if (r->case_label != "III") continue;
            const ConvexInstance inst =
                build_instance(ws.matrices, ws.h, r->rate_target, cfg.power_w(),
                               cfg.noise_comm_w());
            const RelaxedSolution rel = solve_relaxation(inst);
            const Certificate cert = recover_certificate(inst, rel, cfg.tol);
            const double d1 = cert.evals(0);
            const double mu_dev = std::abs(cert.mu_power - d1) / std::abs(d1);
            const double hv =
                (inst.h_unit.adjoint() *
                 cert.evecs.leftCols(cert.top_multiplicity))
                    .norm();
            worst_mu = std::max(worst_mu, mu_dev);
            worst_hv = std::max(worst_hv, hv);
            pass = pass && mu_dev <= 1e-4 && hv <= 1e-4;
        }
        std::snprintf(
            buf, sizeof buf,
            "max residual %.2e; split: |mu_P-d1|/d1 %.2e, |h^H V| %.2e",
            worst_res, worst_mu, worst_hv);
        report(8, "dual certificates hold at every point", pass, buf);
    } catch (const std::exception& e) {
        report(8, "dual certificates hold at every point", false, e.what());
    }

    // 9: simulated estimator error respects the bound at a mid-sweep rate.
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<double> grid = sweep_rate_grid(cfg, ws.capacity);
        const double mid_rate = grid[grid.size() / 2];
        const BeamSolution sol = solve_proposed(ws, cfg, mid_rate);
        TrialControl ctl;
        ctl.trials = cfg.trials;
        ctl.seed = cfg.seed;
        ctl.map.grid_size = cfg.map_grid;
        const TrialStats stats = run_trials(ws.geom, ws.target, ws.prior,
                                            ws.matrices, ws.link, sol.w,
                                            sol.sensing, ctl);
        const double el = seconds_since(t0);
        const bool pass = stats.mce >= 0.95 * stats.pcrb_ref &&
                          stats.mce <= stats.mse && el <= 300.0;
        std::snprintf(buf, sizeof buf,
                      "rate %.3f: mce %.3e >= 0.95*pcrb %.3e, mse %.3e, %.0f s",
                      mid_rate, stats.mce, stats.pcrb_ref, stats.mse, el);
        report(9, "simulated error respects the bound", pass, buf);
    } catch (const std::exception& e) {
        report(9, "simulated error respects the bound", false, e.what());
    }

    // 10: identical config and seed reproduce the CSV byte for byte.
    try {
        const std::string csv_second = to_csv(run_sweep(cfg));
        const bool pass = !csv_first.empty() &&
                          strip_timing(csv_first) == strip_timing(csv_second);
        std::snprintf(buf, sizeof buf, "%zu bytes compared",
                      strip_timing(csv_first).size());
        report(10, "rerun reproduces the table byte for byte", pass, buf);
    } catch (const std::exception& e) {
        report(10, "rerun reproduces the table byte for byte", false, e.what());
    }

    std::printf("%d/10 checks passed\n", 10 - failed);
    return failed == 0 ? 0 : 1;
}
