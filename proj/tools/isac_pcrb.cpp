// Command-line front end: rate sweeps with CSV emission, Monte-Carlo
// validation of a solved design, and one-shot bound evaluation for an
// externally supplied covariance.
//
// Exit codes: 0 success, 2 configuration/input error, 3 every sweep point
// failed to solve, 4 contract violation under --strict.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "isac/baselines.hpp"
#include "isac/beamopt.hpp"
#include "isac/config.hpp"
#include "isac/errors.hpp"
#include "isac/mcsim.hpp"
#include "isac/sweep.hpp"

namespace {

using isac::cxd;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitStrict = 4;

// One token of a plain-text complex matrix: "1.5", "-2j", "3e-4+5e-6j".
// The imaginary part, when present, is the trailing signed group ending in j.
cxd parse_complex_token(const std::string& tok) {
    const auto to_double = [&tok](const std::string& s) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw isac::ConfigError("bad numeric token '" + tok + "'");
    };
    if (tok.empty()) throw isac::ConfigError("empty matrix token");
    if (tok.back() != 'j' && tok.back() != 'J') return {to_double(tok), 0.0};

    const std::string body = tok.substr(0, tok.size() - 1);
    if (body.empty()) throw isac::ConfigError("bad matrix token '" + tok + "'");
    // Split before the last sign that does not follow an exponent marker.
    std::size_t split = std::string::npos;
    for (std::size_t i = 1; i < body.size(); ++i) {
        if ((body[i] == '+' || body[i] == '-') &&
            body[i - 1] != 'e' && body[i - 1] != 'E') {
            split = i;
        }
    }
    if (split == std::string::npos) return {0.0, to_double(body)};
    return {to_double(body.substr(0, split)), to_double(body.substr(split))};
}

Eigen::MatrixXcd read_covariance(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw isac::ConfigError("cannot open covariance file '" + path + "'");
    std::vector<cxd> entries;
    std::string tok;
    while (in >> tok) entries.push_back(parse_complex_token(tok));
    if (static_cast<int>(entries.size()) != n * n) {
        throw isac::ConfigError("covariance file holds " +
                                std::to_string(entries.size()) +
                                " entries, expected " + std::to_string(n * n));
    }
    Eigen::MatrixXcd r(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) r(i, k) = entries[i * n + k];
    const double asym = (r - r.adjoint()).norm();
    if (asym > 1e-6 * std::max(1.0, r.norm()))
        throw isac::ConfigError("covariance is not Hermitian (asymmetry " +
                                std::to_string(asym) + ")");
    r = 0.5 * (r + r.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, r.trace().real()))
        throw isac::ConfigError("covariance is not positive semidefinite");
    return r;
}

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path,
              const std::string& schemes_csv, bool seed_set,
              std::uint64_t seed, const std::string& format, bool strict) {
    isac::ExperimentConfig cfg = isac::load_config(config_path);
    if (!schemes_csv.empty()) {
        // Re-validate through the parser so overrides obey the same rules.
        isac::ExperimentConfig base = cfg;
        base.schemes = split_csv_list(schemes_csv);
        cfg = isac::parse_config(isac::serialize_config(base));
    }
    if (seed_set) cfg.seed = seed;

    const std::vector<isac::SweepRow> rows = isac::run_sweep(cfg);
    bool any_solved = false;
    for (const auto& r : rows) any_solved = any_solved || !r.failed();
    if (!rows.empty() && !any_solved) {
        std::cerr << "every sweep point failed\n" << isac::to_human(rows);
        return kExitSolver;
    }

    const std::string rendered =
        format == "human" ? isac::to_human(rows) : isac::to_csv(rows);
    if (out_path.empty()) {
        std::cout << rendered;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "cannot write '" << out_path << "'\n";
            return kExitConfig;
        }
        out << rendered;
        std::cout << isac::to_human(rows);
        std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
    }

    if (strict) {
        const std::vector<std::string> bad = isac::check_invariants(rows);
        if (!bad.empty()) {
            for (const auto& b : bad) std::cerr << "violation: " << b << "\n";
            return kExitStrict;
        }
    }
    return kExitOk;
}

int cmd_validate(const std::string& config_path, double rate, int trials,
                 bool seed_set, std::uint64_t seed, bool strict) {
    isac::ExperimentConfig cfg = isac::load_config(config_path);
    if (seed_set) cfg.seed = seed;
    if (trials > 0) cfg.trials = trials;
    const isac::Workspace ws = isac::make_workspace(cfg);
    if (rate > ws.capacity) {
        std::cerr << "rate " << rate << " exceeds the MRT capacity "
                  << ws.capacity << "\n";
        return kExitConfig;
    }

    const isac::ConvexInstance inst = isac::build_instance(
        ws.matrices, ws.h, rate, cfg.power_w(), cfg.noise_comm_w());
    const isac::RelaxedSolution rel = isac::solve_relaxation(inst);
    const isac::Certificate cert = isac::recover_certificate(inst, rel, cfg.tol);
    const isac::BeamSolution sol =
        isac::purify(inst, rel, cert, ws.matrices, ws.link, cfg.tol);

    isac::TrialControl ctl;
    ctl.trials = cfg.trials;
    ctl.seed = cfg.seed;
    ctl.map.grid_size = cfg.map_grid;
    const auto t0 = std::chrono::steady_clock::now();
    const isac::TrialStats stats = isac::run_trials(
        ws.geom, ws.target, ws.prior, ws.matrices, ws.link, sol.w, sol.sensing, ctl);
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();

    std::printf("rate_target       %.6f bps/Hz\n", rate);
    std::printf("rate_achieved     %.6f bps/Hz\n", sol.rate);
    std::printf("case              %s\n", isac::to_string(sol.case_label).c_str());
    std::printf("sensing_beams     %zu\n", sol.sensing.size());
    std::printf("pcrb              %.12g\n", stats.pcrb_ref);
    std::printf("mce  (%d trials) %.12g   (%.3fx bound)\n", stats.trials,
                stats.mce, stats.mce / stats.pcrb_ref);
    std::printf("mse               %.12g\n", stats.mse);
    std::printf("elapsed           %.1f s\n", secs);

    const bool bound_ok = stats.mce >= 0.95 * stats.pcrb_ref;
    const bool order_ok = stats.mce <= stats.mse;
    std::printf("bound respected   %s\n", bound_ok ? "yes" : "NO");
    std::printf("mce <= mse        %s\n", order_ok ? "yes" : "NO");
    if (strict && !(bound_ok && order_ok)) return kExitStrict;
    return kExitOk;
}

int cmd_pcrb(const std::string& config_path, const std::string& cov_path) {
    const isac::ExperimentConfig cfg = isac::load_config(config_path);
    const isac::Workspace ws = isac::make_workspace(cfg);
    const Eigen::MatrixXcd r = read_covariance(cov_path, ws.geom.num_tx());
    const double bound = isac::pcrb_periodic(ws.matrices, ws.link, r);
    std::printf("pcrb              %.12g\n", bound);
    std::printf("trace_power       %.12g W\n", r.trace().real());
    std::printf("prior_fisher      %.12g\n", ws.matrices.prior_fisher);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periodic posterior-bound transmit design toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, schemes_csv, cov_path;
    std::string format = "csv";
    std::uint64_t seed = 0;
    double rate = 0.0;
    int trials = 0;
    bool strict = false;

    CLI::App* sweep = app.add_subcommand("sweep", "solve a rate-target sweep");
    sweep->add_option("--config", config_path, "configuration file")->required();
    sweep->add_option("--out", out_path, "CSV destination (stdout if absent)");
    sweep->add_option("--schemes", schemes_csv,
                      "comma list among proposed,b1,b2,b3");
    CLI::Option* sweep_seed = sweep->add_option("--seed", seed, "randomization seed");
    sweep->add_option("--format", format, "csv or human")
        ->check(CLI::IsMember({"csv", "human"}));
    sweep->add_flag("--strict", strict, "exit 4 on contract violations");

    CLI::App* validate =
        app.add_subcommand("validate", "Monte-Carlo check of the solved design");
    validate->add_option("--config", config_path, "configuration file")->required();
    validate->add_option("--rate", rate, "rate target, bps/Hz")->required();
    validate->add_option("--trials", trials, "trial count (config default if 0)");
    CLI::Option* val_seed = validate->add_option("--seed", seed, "trial seed");
    validate->add_flag("--strict", strict, "exit 4 when the bound is violated");

    CLI::App* pcrb =
        app.add_subcommand("pcrb", "evaluate the bound for a stored covariance");
    pcrb->add_option("--config", config_path, "configuration file")->required();
    pcrb->add_option("--covariance", cov_path,
                     "row-major complex matrix file, re+imj tokens")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (app.got_subcommand(sweep)) {
            return cmd_sweep(config_path, out_path, schemes_csv,
                             sweep_seed->count() > 0, seed, format, strict);
        }
        if (app.got_subcommand(validate)) {
            return cmd_validate(config_path, rate, trials,
                                val_seed->count() > 0, seed, strict);
        }
        return cmd_pcrb(config_path, cov_path);
    } catch (const isac::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const isac::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
