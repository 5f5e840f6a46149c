#pragma once

// Uniform planar array geometry, steering vectors and their angle
// derivatives, and the narrowband target / user channels.
//
// Conventions: arrays sit in the xz-plane at the base station, elements on a
// half-wavelength-style grid with `rows x cols` layout.  Element n (0-based)
// has row index n / cols and column index n % cols.  Azimuth theta is the
// random quantity of interest; elevation phi is fixed by scene heights and is
// folded into a per-scene phase scale
//     delta = -pi * (d / lambda) * cos(phi),
// recomputed from phi at construction so it can never go stale.

#include <complex>
#include <Eigen/Dense>

namespace isac {

using cxd = std::complex<double>;

struct UpaGeometry {
    int tx_rows = 1;
    int tx_cols = 1;
    int rx_rows = 1;
    int rx_cols = 1;
    double spacing_over_wavelength = 0.5;  // d / lambda
    double bs_height = 0.0;                // meters above the target plane

    int num_tx() const { return tx_rows * tx_cols; }
    int num_rx() const { return rx_rows * rx_cols; }
    void validate() const;  // throws std::invalid_argument
};

// Elevation and the derived phase scale for one endpoint of a link.  Factory
// functions are the only way to build one, keeping delta consistent with phi.
class SceneAngles {
public:
    // Target on the ground plane at horizontal range `range` from a BS at
    // height `geom.bs_height`: phi = asin(-h_B / r).
    static SceneAngles for_target(const UpaGeometry& geom, double range);

    // Generic endpoint at height `height` and slant range `range`:
    // phi = asin((height - h_B) / range).
    static SceneAngles for_endpoint(const UpaGeometry& geom, double height, double range);

    double range() const { return range_; }
    double elevation() const { return elevation_; }
    double phase_scale() const { return phase_scale_; }  // delta

private:
    SceneAngles(double range, double elevation, double phase_scale)
        : range_(range), elevation_(elevation), phase_scale_(phase_scale) {}
    double range_;
    double elevation_;
    double phase_scale_;
};

// Steering vector of a rows x cols array evaluated at azimuth theta:
//   a_n = exp(j * delta * (c_row(n) cos(theta) + c_col(n) sin(theta)))
// with c_row(n) = rows - 2*(n / cols) - 1 and c_col(n) = cols - 2*(n % cols) - 1.
// All entries have unit modulus; a(theta) is 2*pi-periodic in theta.
Eigen::VectorXcd steering(int rows, int cols, double delta, double theta);

// d/dtheta of `steering`; satisfies a(theta)^H da(theta) = 0 exactly because
// the row/col coefficient grids are symmetric around zero.
Eigen::VectorXcd steering_deriv(int rows, int cols, double delta, double theta);

Eigen::VectorXcd steering_tx(const UpaGeometry& g, const SceneAngles& s, double theta);
Eigen::VectorXcd steering_rx(const UpaGeometry& g, const SceneAngles& s, double theta);
Eigen::VectorXcd steering_tx_deriv(const UpaGeometry& g, const SceneAngles& s, double theta);
Eigen::VectorXcd steering_rx_deriv(const UpaGeometry& g, const SceneAngles& s, double theta);

// Rank-one two-way target response alpha * b(theta) a(theta)^H  (num_rx x num_tx).
Eigen::MatrixXcd target_channel(const UpaGeometry& g, const SceneAngles& s,
                                double theta, cxd alpha);

struct UserPosition {
    double height = 0.0;   // meters
    double azimuth = 0.0;  // radians
    double range = 1.0;    // slant range, meters
};

// Downlink user channel (sqrt(beta0) / r_U) * a_tx(phi_U, theta_U).
// Requires |height - h_B| <= range.
Eigen::VectorXcd user_channel(const UpaGeometry& g, const UserPosition& user, double beta0);

// Wrap an angle into [-pi, pi).
double wrap_angle(double theta);

}  // namespace isac
