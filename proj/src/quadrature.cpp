#include "isac/quadrature.hpp"

#include <cmath>

namespace isac {

Eigen::ArrayXd periodic_nodes(int n) {
    Eigen::ArrayXd t(n);
    const double h = 2.0 * M_PI / n;
    for (int i = 0; i < n; ++i) t(i) = -M_PI + i * h;
    return t;
}

double integrate_periodic(const std::function<double(double)>& f,
                          const QuadratureControl& ctl, const std::string& what) {
    auto eval = [&](int n) {
        const double h = 2.0 * M_PI / n;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += f(-M_PI + i * h);
        return acc * h;
    };
    auto dist = [](double cur, double prev) {
        return std::abs(cur - prev) / std::max(1e-30, std::abs(cur));
    };
    return refine_periodic<double>(eval, dist, ctl, what);
}

}  // namespace isac
