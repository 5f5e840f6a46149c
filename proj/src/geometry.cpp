#include "isac/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace isac {

void UpaGeometry::validate() const {
    if (tx_rows < 1 || tx_cols < 1 || rx_rows < 1 || rx_cols < 1)
        throw std::invalid_argument("array dimensions must be positive");
    if (!(spacing_over_wavelength > 0.0))
        throw std::invalid_argument("element spacing must be positive");
    if (!(bs_height >= 0.0) || !std::isfinite(bs_height))
        throw std::invalid_argument("BS height must be finite and nonnegative");
}

SceneAngles SceneAngles::for_target(const UpaGeometry& geom, double range) {
    return for_endpoint(geom, 0.0, range);
}

SceneAngles SceneAngles::for_endpoint(const UpaGeometry& geom, double height, double range) {
    if (!(range > 0.0)) throw std::invalid_argument("range must be positive");
    const double s = (height - geom.bs_height) / range;
    if (std::abs(s) > 1.0)
        throw std::invalid_argument("height offset exceeds range; elevation undefined");
    const double phi = std::asin(s);
    const double delta = -M_PI * geom.spacing_over_wavelength * std::cos(phi);
    return SceneAngles(range, phi, delta);
}

namespace {

// c_row, c_col in {.., -3, -1, 1, 3, ..}: odd integers for even dims, even for odd.
inline double coeff_row(int rows, int cols, int n) { return rows - 2 * (n / cols) - 1; }
inline double coeff_col(int cols, int n) { return cols - 2 * (n % cols) - 1; }

}  // namespace

Eigen::VectorXcd steering(int rows, int cols, double delta, double theta) {
    const int n = rows * cols;
    const double c = std::cos(theta), s = std::sin(theta);
    Eigen::VectorXcd a(n);
    for (int i = 0; i < n; ++i)
        a(i) = std::polar(1.0, delta * (coeff_row(rows, cols, i) * c + coeff_col(cols, i) * s));
    return a;
}

Eigen::VectorXcd steering_deriv(int rows, int cols, double delta, double theta) {
    const int n = rows * cols;
    const double c = std::cos(theta), s = std::sin(theta);
    Eigen::VectorXcd da(n);
    for (int i = 0; i < n; ++i) {
        const double cr = coeff_row(rows, cols, i), cc = coeff_col(cols, i);
        const cxd a = std::polar(1.0, delta * (cr * c + cc * s));
        da(i) = cxd(0.0, delta * (cc * c - cr * s)) * a;
    }
    return da;
}

Eigen::VectorXcd steering_tx(const UpaGeometry& g, const SceneAngles& s, double theta) {
    return steering(g.tx_rows, g.tx_cols, s.phase_scale(), theta);
}

Eigen::VectorXcd steering_rx(const UpaGeometry& g, const SceneAngles& s, double theta) {
    return steering(g.rx_rows, g.rx_cols, s.phase_scale(), theta);
}

Eigen::VectorXcd steering_tx_deriv(const UpaGeometry& g, const SceneAngles& s, double theta) {
    return steering_deriv(g.tx_rows, g.tx_cols, s.phase_scale(), theta);
}

Eigen::VectorXcd steering_rx_deriv(const UpaGeometry& g, const SceneAngles& s, double theta) {
    return steering_deriv(g.rx_rows, g.rx_cols, s.phase_scale(), theta);
}

Eigen::MatrixXcd target_channel(const UpaGeometry& g, const SceneAngles& s,
                                double theta, cxd alpha) {
    return alpha * (steering_rx(g, s, theta) * steering_tx(g, s, theta).adjoint());
}

Eigen::VectorXcd user_channel(const UpaGeometry& g, const UserPosition& user, double beta0) {
    if (!(beta0 > 0.0)) throw std::invalid_argument("path-loss reference must be positive");
    const SceneAngles s = SceneAngles::for_endpoint(g, user.height, user.range);
    return (std::sqrt(beta0) / user.range) * steering_tx(g, s, user.azimuth);
}

double wrap_angle(double theta) {
    double t = std::remainder(theta, 2.0 * M_PI);  // (-pi, pi]
    if (t >= M_PI) t -= 2.0 * M_PI;
    return t;
}

}  // namespace isac
