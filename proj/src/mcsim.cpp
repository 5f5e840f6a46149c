#include "isac/mcsim.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace isac {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

cxd draw_cn(std::normal_distribution<double>& gauss, std::mt19937_64& rng) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    return {re, im};
}

// Likelihood scorer over a fixed periodic grid.  The steering tables depend
// only on geometry, so one table serves every batch of a trial run.
class PosteriorScorer {
public:
    PosteriorScorer(const UpaGeometry& geom, const SceneAngles& scene,
                    const VonMisesMixture& prior, const MapControl& ctl)
        : geom_(geom), scene_(scene), prior_(prior), ctl_(ctl) {
        if (ctl.grid_size < 512) {
            throw std::invalid_argument("angle grid must have at least 512 nodes");
        }
        const int g = ctl.grid_size;
        a_grid_.resize(geom.num_tx(), g);
        b_grid_.resize(geom.num_rx(), g);
        thetas_.resize(g);
        logp_.resize(g);
        for (int i = 0; i < g; ++i) {
            thetas_(i) = -std::numbers::pi + kTwoPi * i / g;
            a_grid_.col(i) = steering_tx(geom, scene, thetas_(i));
            b_grid_.col(i) = steering_rx(geom, scene, thetas_(i));
            logp_(i) = log_pdf(prior, thetas_(i));
        }
    }

    MapEstimate estimate(const EchoBatch& batch) const {
        if (batch.x.norm() == 0.0) {
            throw std::invalid_argument("transmitted block is zero");
        }
        const double sigma = std::max(batch.noise_var, 1e-300);
        const double nr = static_cast<double>(geom_.num_rx());
        // Rows g: u_g = a(theta_g)^H X and v_g = b(theta_g)^H Y; the matched
        // statistic is num_g = sum_l conj(u_gl) v_gl and |m|^2 = N_r |u_g|^2.
        const MatrixXcd u = a_grid_.adjoint() * batch.x;
        const MatrixXcd v = b_grid_.adjoint() * batch.y;
        const VectorXcd num = u.conjugate().cwiseProduct(v).rowwise().sum();
        const VectorXd u2 = u.rowwise().squaredNorm();

        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < ctl_.grid_size; ++i) {
            const double like =
                u2(i) > 0.0 ? std::norm(num(i)) / (sigma * nr * u2(i)) : 0.0;
            const double score = like + logp_(i);
            if (score > best_score) {
                best_score = score;
                best = i;
            }
        }

        // Golden-section refinement of the bracket around the best node.
        const double step = kTwoPi / ctl_.grid_size;
        double lo = thetas_(best) - step;
        double hi = thetas_(best) + step;
        constexpr double kGolden = 0.6180339887498949;
        double x1 = hi - kGolden * (hi - lo);
        double x2 = lo + kGolden * (hi - lo);
        double f1 = score_at(batch, sigma, x1);
        double f2 = score_at(batch, sigma, x2);
        for (int it = 0; it < ctl_.refine_iters; ++it) {
            if (f1 >= f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - kGolden * (hi - lo);
                f1 = score_at(batch, sigma, x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + kGolden * (hi - lo);
                f2 = score_at(batch, sigma, x2);
            }
        }
        double theta = 0.5 * (lo + hi);
        if (score_at(batch, sigma, theta) < best_score) theta = thetas_(best);
        theta = wrap_angle(theta);

        const VectorXcd a = steering_tx(geom_, scene_, theta);
        const VectorXcd b = steering_rx(geom_, scene_, theta);
        const Eigen::RowVectorXcd u_fine = a.adjoint() * batch.x;
        const cxd num_fine = (b.adjoint() * batch.y).cwiseProduct(u_fine.conjugate()).sum();
        const double m2 = nr * u_fine.squaredNorm();
        MapEstimate out;
        out.theta = theta;
        out.alpha = m2 > 0.0 ? num_fine / m2 : cxd{0.0, 0.0};
        return out;
    }

private:
    double score_at(const EchoBatch& batch, double sigma, double theta) const {
        const VectorXcd a = steering_tx(geom_, scene_, theta);
        const VectorXcd b = steering_rx(geom_, scene_, theta);
        const Eigen::RowVectorXcd u = a.adjoint() * batch.x;
        const double u2 = u.squaredNorm();
        if (u2 <= 0.0) return log_pdf(prior_, theta);
        const cxd num = (b.adjoint() * batch.y).cwiseProduct(u.conjugate()).sum();
        const double nr = static_cast<double>(geom_.num_rx());
        return std::norm(num) / (sigma * nr * u2) + log_pdf(prior_, theta);
    }

    UpaGeometry geom_;
    SceneAngles scene_;
    VonMisesMixture prior_;
    MapControl ctl_;
    MatrixXcd a_grid_, b_grid_;
    VectorXd thetas_, logp_;
};

// Counter-split generator seeds; the mixing constant is the usual 64-bit
// golden-ratio increment.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + (counter + 1) * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

EchoBatch simulate_echo(const UpaGeometry& geom, const SceneAngles& scene,
                        const VectorXcd& w, const std::vector<VectorXcd>& sensing,
                        double theta, cxd alpha, int symbols, double noise_var,
                        std::mt19937_64& rng) {
    if (symbols < 1) throw std::invalid_argument("need at least one symbol interval");
    const int nt = geom.num_tx();
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));

    EchoBatch batch;
    batch.theta = theta;
    batch.alpha = alpha;
    batch.noise_var = noise_var;
    batch.x = MatrixXcd::Zero(nt, symbols);
    const bool has_comm = w.size() > 0 && w.norm() > 0.0;
    for (int l = 0; l < symbols; ++l) {
        if (has_comm) batch.x.col(l) = w * draw_cn(gauss, rng);
        for (const auto& s : sensing) batch.x.col(l) += s * draw_cn(gauss, rng);
    }
    batch.y = target_channel(geom, scene, theta, alpha) * batch.x;
    if (noise_var > 0.0) {
        const double sd = std::sqrt(noise_var);
        for (int l = 0; l < symbols; ++l) {
            for (int i = 0; i < batch.y.rows(); ++i) {
                batch.y(i, l) += sd * draw_cn(gauss, rng);
            }
        }
    }
    return batch;
}

MapEstimate map_estimate(const EchoBatch& batch, const UpaGeometry& geom,
                         const SceneAngles& scene, const VonMisesMixture& prior,
                         const MapControl& ctl) {
    return PosteriorScorer(geom, scene, prior, ctl).estimate(batch);
}

double cyclic_error(double theta_hat, double theta) {
    return 2.0 - 2.0 * std::cos(theta_hat - theta);
}

TrialStats run_trials(const UpaGeometry& geom, const SceneAngles& scene,
                      const VonMisesMixture& prior, const SensingMatrices& scoring,
                      const SensingLinkBudget& link, const VectorXcd& w,
                      const std::vector<VectorXcd>& sensing, const TrialControl& ctl,
                      const AngleEstimator& estimator) {
    if (ctl.trials < 1) throw std::invalid_argument("need at least one trial");

    MatrixXcd r_x = MatrixXcd::Zero(geom.num_tx(), geom.num_tx());
    if (w.size() > 0) r_x += w * w.adjoint();
    for (const auto& s : sensing) r_x += s * s.adjoint();

    TrialStats out;
    out.trials = ctl.trials;
    out.pcrb_ref = pcrb_periodic(scoring, link, r_x);

    std::optional<PosteriorScorer> scorer;
    if (!estimator) scorer.emplace(geom, scene, prior, ctl.map);
    const double mag = std::abs(link.alpha);
    double sum_ce = 0.0;
    double sum_se = 0.0;
    for (int t = 0; t < ctl.trials; ++t) {
        std::mt19937_64 rng(split_seed(ctl.seed, static_cast<std::uint64_t>(t)));
        const double theta = sample(prior, rng);
        std::uniform_real_distribution<double> uphase(0.0, kTwoPi);
        const cxd alpha = std::polar(mag, uphase(rng));
        const EchoBatch batch = simulate_echo(geom, scene, w, sensing, theta, alpha,
                                              link.symbols, link.noise_var, rng);
        const MapEstimate est = estimator ? estimator(batch) : scorer->estimate(batch);
        sum_ce += cyclic_error(est.theta, theta);
        const double diff = est.theta - theta;
        sum_se += diff * diff;
    }
    out.mce = sum_ce / ctl.trials;
    out.mse = sum_se / ctl.trials;
    return out;
}

}  // namespace isac
