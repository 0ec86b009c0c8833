#pragma once

#include <Eigen/Core>

namespace tnkf::detail {

/// a = u * diag(s) * v^T with k = min(rows, cols) columns in u and v, s descending.
struct ThinSvd {
    Eigen::MatrixXd u;
    Eigen::VectorXd s;
    Eigen::MatrixXd v;
};

/// LAPACK dgesdd, falling back to dgesvd if it does not converge.
ThinSvd thin_svd(const Eigen::MatrixXd& a);

}  // namespace tnkf::detail
