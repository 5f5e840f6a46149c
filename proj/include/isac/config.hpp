#pragma once

// Experiment configuration: one JSON document describing the array, the
// target prior, the link budget, the user, and the sweep / Monte-Carlo
// controls.  Logarithmic fields are stored exactly as written and converted
// to linear units here, at the boundary; nothing past this header sees dB.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isac/beamopt.hpp"
#include "isac/errors.hpp"
#include "isac/fisher.hpp"
#include "isac/geometry.hpp"
#include "isac/prior.hpp"

namespace isac {

double dbm_to_watts(double dbm);
double db_to_linear(double db);

struct ExperimentConfig {
    UpaGeometry geometry{4, 4, 4, 5, 0.5, 10.0};
    double target_range_m = 100.0;

    std::vector<VonMisesComponent> prior_components{{-1.2, 300.0, 0.54},
                                                    {-0.6, 80.0, 0.46}};

    // Link budget, logarithmic as configured.
    double power_dbm = 10.0;
    double noise_comm_dbm = -90.0;
    double noise_sense_dbm = -90.0;
    double sensing_snr_db = -8.0;  // P L |alpha|^2 / sigma_S^2
    int symbols = 25;              // L

    double user_height_m = 1.0;
    double user_azimuth_rad = 0.85;
    double user_range_m = 600.0;
    double user_ref_gain_db = -30.0;  // beta_0

    int sweep_points = 20;
    std::vector<double> rates_bpshz;  // explicit grid; empty selects the
                                      // default 20 points up to 0.99 capacity
    std::vector<std::string> schemes{"proposed", "b1", "b2", "b3"};

    int trials = 2000;
    std::uint64_t seed = 1;
    int map_grid = 8192;

    Tolerances tol;

    // Linear-unit views.  Kept as accessors so edits to the logarithmic
    // fields can never leave a stale converted copy behind.
    double power_w() const { return dbm_to_watts(power_dbm); }
    double noise_comm_w() const { return dbm_to_watts(noise_comm_dbm); }
    double noise_sense_w() const { return dbm_to_watts(noise_sense_dbm); }
    double beta0() const { return db_to_linear(user_ref_gain_db); }
    double alpha_mag2() const {
        return db_to_linear(sensing_snr_db) * noise_sense_w() /
               (power_w() * symbols);
    }
    UserPosition user() const {
        return {user_height_m, user_azimuth_rad, user_range_m};
    }
    VonMisesMixture prior() const { return VonMisesMixture(prior_components); }
    // Rate of a full-power matched single beam, the sweep's natural ceiling.
    double mrt_capacity() const;
};

// Parse + validate.  Unknown keys, type mismatches, and out-of-domain values
// raise ConfigError carrying the dotted field path.  Every field is optional
// and defaults to the shipped reference scenario, so "{}" is valid.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Canonical JSON, logarithmic fields verbatim: parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& c);
void save_config(const ExperimentConfig& c, const std::string& path);

// Everything the solvers consume, derived from a config in one place.
struct Workspace {
    UpaGeometry geom;
    SceneAngles target;
    VonMisesMixture prior;
    SensingMatrices matrices;
    SensingLinkBudget link;
    Eigen::VectorXcd h;
    double capacity = 0.0;  // bps/Hz, full power on h
};

Workspace make_workspace(const ExperimentConfig& c);

}  // namespace isac
