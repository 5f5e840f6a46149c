#include "isac/embedding.hpp"

#include <stdexcept>

namespace isac {

Eigen::MatrixXd embed_hermitian(const Eigen::MatrixXcd& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("embed needs a square matrix");
    const Eigen::Index n = m.rows();
    Eigen::MatrixXd x(2 * n, 2 * n);
    x.topLeftCorner(n, n) = m.real();
    x.bottomRightCorner(n, n) = m.real();
    x.topRightCorner(n, n) = -m.imag();
    x.bottomLeftCorner(n, n) = m.imag();
    return x;
}

Eigen::MatrixXcd extract_hermitian(const Eigen::MatrixXd& x) {
    if (x.rows() != x.cols() || x.rows() % 2 != 0)
        throw std::invalid_argument("extract needs an even-dimension square matrix");
    const Eigen::Index n = x.rows() / 2;
    Eigen::MatrixXd re = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
    Eigen::MatrixXd im = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
    Eigen::MatrixXcd m = re.cast<std::complex<double>>() +
                         std::complex<double>(0.0, 1.0) * im.cast<std::complex<double>>();
    return 0.5 * (m + m.adjoint().eval());
}

}  // namespace isac
