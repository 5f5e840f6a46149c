#include "isac/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

namespace isac {

using json = nlohmann::json;

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double ExperimentConfig::mrt_capacity() const {
    const Eigen::VectorXcd h = user_channel(geometry, user(), beta0());
    return std::log2(1.0 + power_w() * h.squaredNorm() / noise_comm_w());
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(msg, path);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) known = known || it.key() == k;
        if (!known) fail(path + "." + it.key(), "unknown key");
    }
}

double get_num(const json& j, const std::string& path, const char* key,
               double def) {
    const auto it = j.find(key);
    if (it == j.end()) return def;
    if (!it->is_number()) fail(path + "." + key, "expected a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) fail(path + "." + key, "must be finite");
    return v;
}

int get_int(const json& j, const std::string& path, const char* key, int def) {
    const auto it = j.find(key);
    if (it == j.end()) return def;
    if (!it->is_number_integer()) fail(path + "." + key, "expected an integer");
    return it->get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& path, const char* key,
                      std::uint64_t def) {
    const auto it = j.find(key);
    if (it == j.end()) return def;
    if (!it->is_number_unsigned() &&
        !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
        fail(path + "." + key, "expected a nonnegative integer");
    }
    return it->get<std::uint64_t>();
}

void require_positive_int(int v, const std::string& path) {
    if (v < 1) fail(path, "must be a positive integer");
}

std::string num_to_string(double v) {
    std::ostringstream os;
    os.precision(15);
    os << v;
    return os.str();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("parse error: ") + e.what());
    }
    check_keys(doc, "config", {"geometry", "target", "prior", "link", "user",
                               "sweep", "mc", "tolerances"});

    ExperimentConfig c;

    if (doc.contains("geometry")) {
        const json& g = doc["geometry"];
        check_keys(g, "geometry",
                   {"tx_rows", "tx_cols", "rx_rows", "rx_cols",
                    "spacing_over_wavelength", "bs_height_m"});
        c.geometry.tx_rows = get_int(g, "geometry", "tx_rows", c.geometry.tx_rows);
        c.geometry.tx_cols = get_int(g, "geometry", "tx_cols", c.geometry.tx_cols);
        c.geometry.rx_rows = get_int(g, "geometry", "rx_rows", c.geometry.rx_rows);
        c.geometry.rx_cols = get_int(g, "geometry", "rx_cols", c.geometry.rx_cols);
        c.geometry.spacing_over_wavelength =
            get_num(g, "geometry", "spacing_over_wavelength",
                    c.geometry.spacing_over_wavelength);
        c.geometry.bs_height =
            get_num(g, "geometry", "bs_height_m", c.geometry.bs_height);
    }
    require_positive_int(c.geometry.tx_rows, "geometry.tx_rows");
    require_positive_int(c.geometry.tx_cols, "geometry.tx_cols");
    require_positive_int(c.geometry.rx_rows, "geometry.rx_rows");
    require_positive_int(c.geometry.rx_cols, "geometry.rx_cols");
    if (c.geometry.spacing_over_wavelength <= 0.0)
        fail("geometry.spacing_over_wavelength", "must be positive");
    if (c.geometry.bs_height < 0.0) fail("geometry.bs_height_m", "must be >= 0");

    if (doc.contains("target")) {
        const json& t = doc["target"];
        check_keys(t, "target", {"range_m"});
        c.target_range_m = get_num(t, "target", "range_m", c.target_range_m);
    }
    if (c.target_range_m <= 0.0) fail("target.range_m", "must be positive");
    if (c.target_range_m < c.geometry.bs_height)
        fail("target.range_m", "must be at least geometry.bs_height_m");

    if (doc.contains("prior")) {
        const json& p = doc["prior"];
        check_keys(p, "prior", {"components"});
        const auto it = p.find("components");
        if (it != p.end()) {
            if (!it->is_array() || it->empty())
                fail("prior.components", "expected a non-empty array");
            c.prior_components.clear();
            for (std::size_t k = 0; k < it->size(); ++k) {
                const std::string path =
                    "prior.components[" + std::to_string(k) + "]";
                const json& comp = (*it)[k];
                check_keys(comp, path, {"mean_rad", "concentration", "weight"});
                VonMisesComponent vc;
                vc.mean = get_num(comp, path, "mean_rad", 0.0);
                vc.concentration = get_num(comp, path, "concentration", 1.0);
                vc.weight = get_num(comp, path, "weight", 1.0);
                if (vc.concentration <= 0.0)
                    fail(path + ".concentration", "must be positive");
                if (vc.weight < 0.0) fail(path + ".weight", "must be >= 0");
                c.prior_components.push_back(vc);
            }
        }
    }
    {
        double wsum = 0.0;
        for (const auto& vc : c.prior_components) wsum += vc.weight;
        if (std::abs(wsum - 1.0) > 1e-9)
            fail("prior.components",
                 "weights sum to " + num_to_string(wsum) + ", expected 1");
    }

    if (doc.contains("link")) {
        const json& l = doc["link"];
        check_keys(l, "link", {"power_dbm", "noise_comm_dbm", "noise_sense_dbm",
                               "symbols", "sensing_snr_db"});
        c.power_dbm = get_num(l, "link", "power_dbm", c.power_dbm);
        c.noise_comm_dbm = get_num(l, "link", "noise_comm_dbm", c.noise_comm_dbm);
        c.noise_sense_dbm =
            get_num(l, "link", "noise_sense_dbm", c.noise_sense_dbm);
        c.symbols = get_int(l, "link", "symbols", c.symbols);
        c.sensing_snr_db = get_num(l, "link", "sensing_snr_db", c.sensing_snr_db);
    }
    require_positive_int(c.symbols, "link.symbols");

    if (doc.contains("user")) {
        const json& u = doc["user"];
        check_keys(u, "user",
                   {"height_m", "azimuth_rad", "range_m", "ref_gain_db"});
        c.user_height_m = get_num(u, "user", "height_m", c.user_height_m);
        c.user_azimuth_rad = get_num(u, "user", "azimuth_rad", c.user_azimuth_rad);
        c.user_range_m = get_num(u, "user", "range_m", c.user_range_m);
        c.user_ref_gain_db = get_num(u, "user", "ref_gain_db", c.user_ref_gain_db);
    }
    if (c.user_range_m <= 0.0) fail("user.range_m", "must be positive");
    if (std::abs(c.user_height_m - c.geometry.bs_height) > c.user_range_m)
        fail("user.range_m", "shorter than the BS-user height difference");

    if (doc.contains("sweep")) {
        const json& s = doc["sweep"];
        check_keys(s, "sweep", {"points", "rates_bpshz", "schemes"});
        c.sweep_points = get_int(s, "sweep", "points", c.sweep_points);
        if (const auto it = s.find("rates_bpshz"); it != s.end()) {
            if (!it->is_array()) fail("sweep.rates_bpshz", "expected an array");
            c.rates_bpshz.clear();
            for (std::size_t k = 0; k < it->size(); ++k) {
                const std::string path =
                    "sweep.rates_bpshz[" + std::to_string(k) + "]";
                if (!(*it)[k].is_number()) fail(path, "expected a number");
                const double r = (*it)[k].get<double>();
                if (!std::isfinite(r) || r < 0.0)
                    fail(path, "must be a finite rate >= 0");
                c.rates_bpshz.push_back(r);
            }
        }
        if (const auto it = s.find("schemes"); it != s.end()) {
            if (!it->is_array()) fail("sweep.schemes", "expected an array");
            c.schemes.clear();
            for (std::size_t k = 0; k < it->size(); ++k) {
                const std::string path = "sweep.schemes[" + std::to_string(k) + "]";
                if (!(*it)[k].is_string()) fail(path, "expected a string");
                const std::string name = (*it)[k].get<std::string>();
                if (name != "proposed" && name != "b1" && name != "b2" &&
                    name != "b3") {
                    fail(path, "unknown scheme '" + name + "'");
                }
                for (const auto& prev : c.schemes)
                    if (prev == name) fail(path, "duplicate scheme '" + name + "'");
                c.schemes.push_back(name);
            }
            if (c.schemes.empty()) fail("sweep.schemes", "expected at least one scheme");
        }
    }
    require_positive_int(c.sweep_points, "sweep.points");

    if (doc.contains("mc")) {
        const json& m = doc["mc"];
        check_keys(m, "mc", {"trials", "seed", "grid_size"});
        c.trials = get_int(m, "mc", "trials", c.trials);
        c.seed = get_u64(m, "mc", "seed", c.seed);
        c.map_grid = get_int(m, "mc", "grid_size", c.map_grid);
    }
    require_positive_int(c.trials, "mc.trials");
    if (c.map_grid < 512) fail("mc.grid_size", "must be at least 512");

    if (doc.contains("tolerances")) {
        const json& t = doc["tolerances"];
        check_keys(t, "tolerances",
                   {"feas", "kkt", "cluster", "mu", "lambda", "tight", "rate"});
        c.tol.feas = get_num(t, "tolerances", "feas", c.tol.feas);
        c.tol.kkt = get_num(t, "tolerances", "kkt", c.tol.kkt);
        c.tol.cluster = get_num(t, "tolerances", "cluster", c.tol.cluster);
        c.tol.mu = get_num(t, "tolerances", "mu", c.tol.mu);
        c.tol.lambda = get_num(t, "tolerances", "lambda", c.tol.lambda);
        c.tol.tight = get_num(t, "tolerances", "tight", c.tol.tight);
        c.tol.rate = get_num(t, "tolerances", "rate", c.tol.rate);
        for (const double v : {c.tol.feas, c.tol.kkt, c.tol.cluster, c.tol.mu,
                               c.tol.lambda, c.tol.tight, c.tol.rate}) {
            if (v <= 0.0) fail("tolerances", "every tolerance must be positive");
        }
    }

    // Rate feasibility needs the channel, so it comes after everything that
    // shapes it.
    const double cap = c.mrt_capacity();
    for (std::size_t k = 0; k < c.rates_bpshz.size(); ++k) {
        if (c.rates_bpshz[k] > cap) {
            fail("sweep.rates_bpshz[" + std::to_string(k) + "]",
                 "rate " + num_to_string(c.rates_bpshz[k]) +
                     " exceeds the MRT capacity " + num_to_string(cap));
        }
    }

    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    nlohmann::ordered_json doc;
    doc["geometry"] = {{"tx_rows", c.geometry.tx_rows},
                       {"tx_cols", c.geometry.tx_cols},
                       {"rx_rows", c.geometry.rx_rows},
                       {"rx_cols", c.geometry.rx_cols},
                       {"spacing_over_wavelength", c.geometry.spacing_over_wavelength},
                       {"bs_height_m", c.geometry.bs_height}};
    doc["target"] = {{"range_m", c.target_range_m}};
    nlohmann::ordered_json comps = nlohmann::ordered_json::array();
    for (const auto& vc : c.prior_components) {
        comps.push_back({{"mean_rad", vc.mean},
                         {"concentration", vc.concentration},
                         {"weight", vc.weight}});
    }
    doc["prior"] = {{"components", comps}};
    doc["link"] = {{"power_dbm", c.power_dbm},
                   {"noise_comm_dbm", c.noise_comm_dbm},
                   {"noise_sense_dbm", c.noise_sense_dbm},
                   {"symbols", c.symbols},
                   {"sensing_snr_db", c.sensing_snr_db}};
    doc["user"] = {{"height_m", c.user_height_m},
                   {"azimuth_rad", c.user_azimuth_rad},
                   {"range_m", c.user_range_m},
                   {"ref_gain_db", c.user_ref_gain_db}};
    doc["sweep"] = {{"points", c.sweep_points},
                    {"rates_bpshz", c.rates_bpshz},
                    {"schemes", c.schemes}};
    doc["mc"] = {{"trials", c.trials}, {"seed", c.seed}, {"grid_size", c.map_grid}};
    doc["tolerances"] = {{"feas", c.tol.feas},     {"kkt", c.tol.kkt},
                         {"cluster", c.tol.cluster}, {"mu", c.tol.mu},
                         {"lambda", c.tol.lambda},   {"tight", c.tol.tight},
                         {"rate", c.tol.rate}};
    return doc.dump(2) + "\n";
}

void save_config(const ExperimentConfig& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << serialize_config(c);
}

Workspace make_workspace(const ExperimentConfig& c) {
    Workspace w{c.geometry,
                SceneAngles::for_target(c.geometry, c.target_range_m),
                c.prior(),
                SensingMatrices{},
                SensingLinkBudget{},
                Eigen::VectorXcd{},
                0.0};
    w.matrices = assemble_matrices(w.geom, w.target, w.prior);
    w.link = SensingLinkBudget{cxd(std::sqrt(c.alpha_mag2()), 0.0), c.symbols,
                               c.noise_sense_w()};
    w.h = user_channel(w.geom, c.user(), c.beta0());
    w.capacity = c.mrt_capacity();
    return w;
}

}  // namespace isac
