#pragma once

// Monte-Carlo validation of the periodic bound: simulate target echoes for
// beams (w, S), estimate the angle by a grid-plus-refinement posterior
// search with the gain eliminated in closed form, and aggregate cyclic and
// squared errors against the bound.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "isac/fisher.hpp"
#include "isac/geometry.hpp"
#include "isac/prior.hpp"

namespace isac {

struct EchoBatch {
    Eigen::MatrixXcd x;   // num_tx x L transmitted block
    Eigen::MatrixXcd y;   // num_rx x L received block
    double theta = 0.0;   // true angle
    cxd alpha{0.0, 0.0};  // true two-way gain
    double noise_var = 0.0;
};

// x_l = w c_l + S upsilon_l with unit-variance circular Gaussian symbols and
// y_l = alpha b(theta) a(theta)^H x_l + n_l, n_l ~ CN(0, noise_var I).
EchoBatch simulate_echo(const UpaGeometry& geom, const SceneAngles& scene,
                        const Eigen::VectorXcd& w,
                        const std::vector<Eigen::VectorXcd>& sensing, double theta,
                        cxd alpha, int symbols, double noise_var, std::mt19937_64& rng);

struct MapEstimate {
    double theta = 0.0;
    cxd alpha{0.0, 0.0};
};

struct MapControl {
    int grid_size = 8192;    // periodic coarse grid, at least 512 nodes
    int refine_iters = 40;   // golden-section steps inside the best bracket
};

// Maximum-posterior search: for each angle the conditional gain estimate is
// alpha_hat(theta) = <m, y> / |m|^2 with m = vec(b a^H X), and the score
// |<m, y>|^2 / (noise_var |m|^2) + log p(theta) is maximised over the grid,
// then refined.  Throws std::invalid_argument for a zero transmitted block
// or a grid below 512 nodes.
MapEstimate map_estimate(const EchoBatch& batch, const UpaGeometry& geom,
                         const SceneAngles& scene, const VonMisesMixture& prior,
                         const MapControl& ctl = {});

// 2 - 2 cos(theta_hat - theta), the per-sample cyclic error.
double cyclic_error(double theta_hat, double theta);

struct TrialStats {
    double mce = 0.0;      // mean cyclic error
    double mse = 0.0;      // mean squared raw difference, no wrapping
    int trials = 0;
    double pcrb_ref = 0.0;  // bound for the covariance the beams realise
};

struct TrialControl {
    int trials = 2000;
    std::uint64_t seed = 1;
    MapControl map;
};

using AngleEstimator = std::function<MapEstimate(const EchoBatch&)>;

// Draw the angle from the prior and a uniformly random gain phase per trial,
// simulate one echo block, estimate, aggregate.  Per-trial generators are
// split from the seed by a counter, so results do not depend on evaluation
// order.  A custom estimator replaces the posterior search when given.
TrialStats run_trials(const UpaGeometry& geom, const SceneAngles& scene,
                      const VonMisesMixture& prior, const SensingMatrices& scoring,
                      const SensingLinkBudget& link, const Eigen::VectorXcd& w,
                      const std::vector<Eigen::VectorXcd>& sensing,
                      const TrialControl& ctl = {}, const AngleEstimator& estimator = {});

}  // namespace isac
