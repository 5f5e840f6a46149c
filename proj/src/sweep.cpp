#include "isac/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "isac/baselines.hpp"
#include "isac/beamopt.hpp"

namespace isac {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kRateSlack = 1e-6;  // bps/Hz forgiven on achieved rates

const std::vector<std::string>& scheme_order() {
    static const std::vector<std::string> order{"proposed", "b1", "b2", "b3"};
    return order;
}

double sensing_power(const BeamSolution& sol) {
    double p = 0.0;
    for (const auto& s : sol.sensing) p += s.squaredNorm();
    return p;
}

BeamSolution solve_scheme(const std::string& scheme, const ConvexInstance& inst,
                          const Workspace& ws, const ExperimentConfig& cfg) {
    if (scheme == "proposed") {
        const RelaxedSolution rel = solve_relaxation(inst);
        const Certificate cert = recover_certificate(inst, rel, cfg.tol);
        return purify(inst, rel, cert, ws.matrices, ws.link, cfg.tol);
    }
    if (scheme == "b1") return sensing_oriented(inst, ws.matrices, ws.link, cfg.tol);
    if (scheme == "b2") {
        RandomizeOptions ropt;
        ropt.seed = cfg.seed;
        return dual_functional(inst, ws.matrices, ws.link, cfg.tol, ropt);
    }
    return most_probable_angle(inst, ws.geom, ws.target, ws.prior, ws.matrices,
                               ws.link, cfg.tol);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

std::vector<double> sweep_rate_grid(const ExperimentConfig& c, double capacity) {
    std::vector<double> rates = c.rates_bpshz;
    if (rates.empty()) {
        const double lo = 0.1;
        const double hi = 0.99 * capacity;
        const int n = c.sweep_points;
        for (int i = 0; i < n; ++i) {
            rates.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
        }
    }
    std::sort(rates.begin(), rates.end());
    return rates;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
    const Workspace ws = make_workspace(cfg);
    const std::vector<double> rates = sweep_rate_grid(cfg, ws.capacity);

    std::vector<std::string> schemes;
    for (const auto& s : scheme_order()) {
        if (std::find(cfg.schemes.begin(), cfg.schemes.end(), s) !=
            cfg.schemes.end()) {
            schemes.push_back(s);
        }
    }

    std::vector<SweepRow> rows;
    rows.reserve(rates.size() * schemes.size());
    for (const double rate : rates) {
        const ConvexInstance inst = build_instance(
            ws.matrices, ws.h, rate, cfg.power_w(), cfg.noise_comm_w());
        for (const auto& scheme : schemes) {
            SweepRow row;
            row.rate_target = rate;
            row.scheme = scheme;
            row.pcrb = row.rate_achieved = kNan;
            row.sensing_power_frac = row.kkt_residual = row.tight_rel = kNan;
            // The sensing-oriented design never looks at the floor, so it
            // runs even where the floor is unattainable.
            const bool needs_floor = scheme != "b1";
            const auto t0 = std::chrono::steady_clock::now();
            if (needs_floor && !inst.feasible()) {
                row.status = "infeasible";
            } else {
                try {
                    const BeamSolution sol = solve_scheme(scheme, inst, ws, cfg);
                    row.pcrb = sol.pcrb;
                    row.rate_achieved = sol.rate;
                    row.case_label = to_string(sol.case_label);
                    row.rank_rc = sol.rank_rc;
                    row.rank_rs = sol.rank_rs;
                    row.sensing_power_frac = sensing_power(sol) / cfg.power_w();
                    row.kkt_residual = sol.kkt_residual;
                    row.tight_rel = sol.tight_rel;
                    row.sensing_beams = static_cast<int>(sol.sensing.size());
                    row.status = sol.rate >= rate - kRateSlack
                                     ? "ok"
                                     : "below_rate_floor";
                } catch (const SolverError&) {
                    row.status = "solver_error";
                } catch (const CertificateError&) {
                    row.status = "certificate_error";
                } catch (const std::exception&) {
                    row.status = "error";
                }
            }
            row.solve_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string to_csv(const std::vector<SweepRow>& rows) {
    std::string out =
        "rate_target_bpshz,scheme,pcrb,rate_achieved_bpshz,case,rank_rc,"
        "rank_rs,sensing_power_frac,kkt_residual,solve_ms,status\n";
    for (const auto& r : rows) {
        out += fmt(r.rate_target) + ',' + r.scheme + ',' + fmt(r.pcrb) + ',' +
               fmt(r.rate_achieved) + ',' + r.case_label + ',' +
               std::to_string(r.rank_rc) + ',' + std::to_string(r.rank_rs) +
               ',' + fmt(r.sensing_power_frac) + ',' + fmt(r.kkt_residual) +
               ',' + fmt(r.solve_ms) + ',' + r.status + '\n';
    }
    return out;
}

std::string to_human(const std::vector<SweepRow>& rows) {
    std::string out =
        "  rate_target scheme          pcrb  rate_achieved case  rk_c rk_s "
        "sense_frac   kkt_resid  solve_ms status\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf,
                      "%13.6f %-8s %11.5e %14.6f %-5s %4d %4d %10.4f %11.3e "
                      "%9.1f %s\n",
                      r.rate_target, r.scheme.c_str(), r.pcrb, r.rate_achieved,
                      r.case_label.c_str(), r.rank_rc, r.rank_rs,
                      r.sensing_power_frac, r.kkt_residual, r.solve_ms,
                      r.status.c_str());
        out += buf;
    }
    return out;
}

std::vector<std::string> check_invariants(const std::vector<SweepRow>& rows) {
    std::vector<std::string> bad;
    const auto flag = [&bad](const SweepRow& r, const std::string& what) {
        bad.push_back("rate " + fmt(r.rate_target) + " " + r.scheme + ": " + what);
    };

    const SweepRow* prev_prop = nullptr;
    for (const auto& r : rows) {
        if (r.status == "ok" && r.rate_achieved < r.rate_target - kRateSlack)
            flag(r, "achieved rate " + fmt(r.rate_achieved) + " below target");
        if (r.scheme != "proposed" || r.failed()) continue;
        if (r.sensing_beams > 1)
            flag(r, std::to_string(r.sensing_beams) + " sensing beams");
        if (!(r.tight_rel <= 1e-6))
            flag(r, "relaxation gap " + fmt(r.tight_rel));
        if (prev_prop && r.pcrb < prev_prop->pcrb * (1.0 - 1e-8) - 1e-15)
            flag(r, "pcrb decreased from " + fmt(prev_prop->pcrb) + " to " +
                        fmt(r.pcrb));
        prev_prop = &r;
    }

    // Benchmark ordering within each rate group.
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        const SweepRow *prop = nullptr, *b1 = nullptr, *b2 = nullptr,
                       *b3 = nullptr;
        while (j < rows.size() && rows[j].rate_target == rows[i].rate_target) {
            const SweepRow& r = rows[j];
            if (!r.failed() && r.status != "infeasible") {
                if (r.scheme == "proposed") prop = &r;
                if (r.scheme == "b1") b1 = &r;
                if (r.scheme == "b2") b2 = &r;
                if (r.scheme == "b3") b3 = &r;
            }
            ++j;
        }
        if (prop) {
            if (b1 && b1->pcrb > prop->pcrb + 1e-8)
                flag(*prop, "b1 above proposed: " + fmt(b1->pcrb) + " > " + fmt(prop->pcrb));
            if (b2 && prop->pcrb > b2->pcrb + 1e-8)
                flag(*prop, "worse than b2: " + fmt(prop->pcrb) + " > " + fmt(b2->pcrb));
            if (b3 && prop->pcrb > b3->pcrb + 1e-8)
                flag(*prop, "worse than b3: " + fmt(prop->pcrb) + " > " + fmt(b3->pcrb));
        }
        i = j;
    }
    return bad;
}

}  // namespace isac
