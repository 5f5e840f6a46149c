#include "isac/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "isac/geometry.hpp"

namespace isac {

namespace {

// Power series for exp(-k) I_nu(k), reliable for small and moderate k.
double scaled_bessel_series(int nu, double k) {
    const double half = 0.5 * k;
    double term = 1.0;
    for (int i = 1; i <= nu; ++i) term *= half / i;  // (k/2)^nu / nu!
    double sum = term;
    const double half2 = half * half;
    for (int m = 1; m < 200; ++m) {
        term *= half2 / (static_cast<double>(m) * (m + nu));
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return sum * std::exp(-k);
}

// Large-argument expansion of exp(-k) I_nu(k); truncated where terms stop
// shrinking.  Accurate to ~1e-15 for k >= 20.
double scaled_bessel_asymptotic(int nu, double k) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0, sum = 1.0;
    for (int m = 0; m < 30; ++m) {
        const double odd = 2.0 * m + 1.0;
        const double next = term * -(mu - odd * odd) / (8.0 * k * (m + 1.0));
        if (std::abs(next) >= std::abs(term) && m > 0) break;
        term = next;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum / std::sqrt(2.0 * M_PI * k);
}

double scaled_bessel(int nu, double k) {
    if (k < 0.0 || !std::isfinite(k)) throw std::invalid_argument("kappa must be finite and >= 0");
    return k < 20.0 ? scaled_bessel_series(nu, k) : scaled_bessel_asymptotic(nu, k);
}

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Best/Fisher (1979) rejection sampler for a single von Mises component.
double sample_von_mises(double mean, double kappa, std::mt19937_64& rng) {
    if (kappa < 1e-6) return wrap_angle(mean + (2.0 * uniform01(rng) - 1.0) * M_PI);
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double r = (1.0 + rho * rho) / (2.0 * rho);
    while (true) {
        const double z = std::cos(M_PI * uniform01(rng));
        const double f = (1.0 + r * z) / (r + z);
        const double c = kappa * (r - f);
        const double u2 = uniform01(rng);
        if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
            const double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
            return wrap_angle(mean + sign * std::acos(f));
        }
    }
}

}  // namespace

VonMisesMixture::VonMisesMixture(std::vector<VonMisesComponent> components)
    : comps_(std::move(components)) {
    if (comps_.empty()) throw std::invalid_argument("mixture needs at least one component");
    double total = 0.0;
    for (auto& c : comps_) {
        if (!(c.concentration > 0.0) || !std::isfinite(c.concentration))
            throw std::invalid_argument("component concentration must be positive and finite");
        if (c.weight < 0.0) throw std::invalid_argument("component weight must be nonnegative");
        if (!std::isfinite(c.mean)) throw std::invalid_argument("component mean must be finite");
        c.mean = wrap_angle(c.mean);
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("component weights must sum to 1");
}

double scaled_bessel_i0(double kappa) { return scaled_bessel(0, kappa); }
double scaled_bessel_i1(double kappa) { return scaled_bessel(1, kappa); }

double bessel_ratio(double kappa) {
    return scaled_bessel(1, kappa) / scaled_bessel(0, kappa);
}

double log_pdf(const VonMisesMixture& mix, double theta) {
    // log sum_k exp(l_k) with l_k = log w_k + kappa_k (cos(theta - m_k) - 1)
    //                              - log(2 pi exp(-kappa_k) I0(kappa_k))
    double lmax = -std::numeric_limits<double>::infinity();
    std::vector<double> l(mix.size());
    int i = 0;
    for (const auto& c : mix.components()) {
        const double lk = (c.weight > 0.0 ? std::log(c.weight)
                                          : -std::numeric_limits<double>::infinity()) +
                          c.concentration * (std::cos(theta - c.mean) - 1.0) -
                          std::log(2.0 * M_PI * scaled_bessel_i0(c.concentration));
        l[i++] = lk;
        lmax = std::max(lmax, lk);
    }
    double s = 0.0;
    for (double lk : l) s += std::exp(lk - lmax);
    return lmax + std::log(s);
}

double pdf(const VonMisesMixture& mix, double theta) { return std::exp(log_pdf(mix, theta)); }

double score_energy(const VonMisesMixture& mix, const QuadratureControl& ctl) {
    double direct = 0.0;
    for (const auto& c : mix.components())
        direct += c.weight * c.concentration * bessel_ratio(c.concentration);
    if (mix.size() == 1) return direct;

    const auto& comps = mix.components();
    const int K = mix.size();
    auto eval = [&](int n) {
        const double h = 2.0 * M_PI / n;
        std::vector<double> f(K), s(K);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double th = -M_PI + i * h;
            double denom = 0.0;
            for (int k = 0; k < K; ++k) {
                const auto& c = comps[k];
                f[k] = std::exp(c.concentration * (std::cos(th - c.mean) - 1.0)) /
                       (2.0 * M_PI * scaled_bessel_i0(c.concentration));
                s[k] = c.concentration * std::sin(th - c.mean);
                denom += c.weight * f[k];
            }
            if (denom < 1e-300) continue;
            double cross = 0.0;
            for (int k1 = 0; k1 < K; ++k1)
                for (int k2 = k1 + 1; k2 < K; ++k2) {
                    const double d = s[k1] - s[k2];
                    cross += 2.0 * comps[k1].weight * comps[k2].weight * f[k1] * f[k2] * d * d;
                }
            acc += cross / (2.0 * denom);
        }
        return acc * h;
    };
    auto dist = [](double cur, double prev) {
        return std::abs(cur - prev) / std::max(1e-30, std::abs(cur));
    };
    const double rho = refine_periodic<double>(eval, dist, ctl, "mixture score cross term");
    return direct - rho;
}

double sample(const VonMisesMixture& mix, std::mt19937_64& rng) {
    const double u = uniform01(rng);
    double cum = 0.0;
    const auto& comps = mix.components();
    for (const auto& c : comps) {
        cum += c.weight;
        if (u < cum) return sample_von_mises(c.mean, c.concentration, rng);
    }
    return sample_von_mises(comps.back().mean, comps.back().concentration, rng);
}

double argmax_pdf(const VonMisesMixture& mix, int grid_size) {
    if (grid_size < 8) throw std::invalid_argument("mode grid too small");
    const double h = 2.0 * M_PI / grid_size;
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_size; ++i) {
        const double v = log_pdf(mix, -M_PI + i * h);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    // golden-section refinement of [theta* - h, theta* + h]
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = -M_PI + best * h - h, b = -M_PI + best * h + h;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = log_pdf(mix, x1), f2 = log_pdf(mix, x2);
    for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = log_pdf(mix, x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = log_pdf(mix, x1);
        }
    }
    return wrap_angle(0.5 * (a + b));
}

}  // namespace isac
