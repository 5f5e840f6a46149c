#pragma once

// Real symmetric embedding of complex Hermitian matrices:
//   embed(M) = [[Re M, -Im M], [Im M, Re M]].
// embed(M) is symmetric iff M is Hermitian, eigenvalues of M appear twice,
// and for Hermitian A, B:  <embed(A), embed(B)>_F = 2 Re tr(A B).
// extract() inverts embed on its range and projects (by block averaging) any
// other symmetric matrix onto it.

#include <Eigen/Dense>

namespace isac {

Eigen::MatrixXd embed_hermitian(const Eigen::MatrixXcd& m);
Eigen::MatrixXcd extract_hermitian(const Eigen::MatrixXd& x);

}  // namespace isac
