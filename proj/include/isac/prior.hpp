#pragma once

// Von Mises mixture prior on a periodic angle: density, log-density, score
// energy E[(d/dtheta log p)^2], exact sampling, and mode location.  All
// Bessel work uses exponentially scaled forms so concentrations up to 1e6
// stay finite.

#include <random>
#include <vector>

#include "isac/quadrature.hpp"

namespace isac {

struct VonMisesComponent {
    double mean = 0.0;           // wrapped into [-pi, pi) on construction
    double concentration = 1.0;  // kappa > 0
    double weight = 1.0;         // weights sum to 1
};

class VonMisesMixture {
public:
    // Validates and normalises: throws std::invalid_argument when empty, a
    // kappa is not positive and finite, a weight is negative, or the weights
    // do not sum to 1 within 1e-9.  Means are wrapped into [-pi, pi).
    explicit VonMisesMixture(std::vector<VonMisesComponent> components);

    const std::vector<VonMisesComponent>& components() const { return comps_; }
    int size() const { return static_cast<int>(comps_.size()); }

private:
    std::vector<VonMisesComponent> comps_;
};

// exp(-kappa) * I_nu(kappa) for nu = 0, 1; finite for all kappa >= 0.
double scaled_bessel_i0(double kappa);
double scaled_bessel_i1(double kappa);

// I_1(kappa) / I_0(kappa), the usual mean-resultant-length ratio.
double bessel_ratio(double kappa);

double pdf(const VonMisesMixture& mix, double theta);
double log_pdf(const VonMisesMixture& mix, double theta);

// E[(d/dtheta log p)^2] = sum_k p_k kappa_k I1/I0(kappa_k) - rho, where the
// cross term rho >= 0 is a periodic integral that vanishes for a single
// component.  rho is evaluated by refined periodic quadrature.
double score_energy(const VonMisesMixture& mix, const QuadratureControl& ctl = {});

// Exact draw: component by cumulative weight, then Best/Fisher rejection for
// the wrapped angle.  Returns a value in [-pi, pi).
double sample(const VonMisesMixture& mix, std::mt19937_64& rng);

// Mode of the density located by a dense grid pass plus golden-section
// refinement of the bracketing interval.
double argmax_pdf(const VonMisesMixture& mix, int grid_size = 1 << 16);

}  // namespace isac
