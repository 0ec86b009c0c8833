#include "svd.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>
#include <lapacke.h>

namespace tnkf::detail {

ThinSvd thin_svd(const Eigen::MatrixXd& a) {
    const auto m = static_cast<lapack_int>(a.rows());
    const auto n = static_cast<lapack_int>(a.cols());
    const lapack_int k = std::min(m, n);
    ThinSvd out{Eigen::MatrixXd(m, k), Eigen::VectorXd(k), Eigen::MatrixXd(k, n)};
    if (k == 0) return out;

    Eigen::MatrixXd work = a;
    lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', m, n, work.data(), std::max<lapack_int>(m, 1),
                                     out.s.data(), out.u.data(), std::max<lapack_int>(m, 1), out.v.data(),
                                     std::max<lapack_int>(k, 1));
    if (info > 0) {
        work = a;
        std::vector<double> superb(static_cast<std::size_t>(std::max<lapack_int>(k - 1, 1)));
        info = LAPACKE_dgesvd(LAPACK_COL_MAJOR, 'S', 'S', m, n, work.data(), std::max<lapack_int>(m, 1), out.s.data(),
                              out.u.data(), std::max<lapack_int>(m, 1), out.v.data(), std::max<lapack_int>(k, 1),
                              superb.data());
    }
    if (info != 0) {
        throw std::runtime_error(fmt::format("SVD of a {} x {} matrix failed (LAPACK info {})", m, n, info));
    }
    out.v.transposeInPlace();
    return out;
}

}  // namespace tnkf::detail
