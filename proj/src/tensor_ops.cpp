#include "tnkf/tensor_ops.hpp"

#include <fmt/format.h>

#include "tnkf/errors.hpp"

namespace tnkf {

DenseTensor mode_k_product(const DenseTensor& t, const Eigen::MatrixXd& m, Index k) {
    if (k < 1 || k > t.order()) {
        throw DimensionError(fmt::format("mode {} out of range for an order-{} tensor", k, t.order()));
    }
    const Index nk = t.dim(k - 1);
    if (static_cast<Index>(m.cols()) != nk) {
        throw DimensionError(fmt::format("mode-{} product: matrix has {} columns, tensor mode has {}", k,
                                         m.cols(), nk));
    }
    Index left = 1;
    for (Index j = 0; j + 1 < k; ++j) left *= t.dim(j);
    const Index right = t.size() / (left * nk);
    const Index rows = static_cast<Index>(m.rows());

    Dims out_dims = t.dims();
    out_dims[k - 1] = rows;
    std::vector<double> out(checked_element_count(out_dims, "mode_k_product"));

    const auto eleft = static_cast<Eigen::Index>(left);
    for (Index r = 0; r < right; ++r) {
        Eigen::Map<const Eigen::MatrixXd> in_slice(t.data().data() + r * left * nk, eleft,
                                                   static_cast<Eigen::Index>(nk));
        Eigen::Map<Eigen::MatrixXd> out_slice(out.data() + r * left * rows, eleft,
                                              static_cast<Eigen::Index>(rows));
        out_slice.noalias() = in_slice * m.transpose();
    }
    return DenseTensor(std::move(out_dims), std::move(out));
}

DenseTensor kronecker(const DenseTensor& b, const DenseTensor& c) {
    if (b.order() != c.order()) {
        throw DimensionError(fmt::format("kronecker: order mismatch ({} vs {})", b.order(), c.order()));
    }
    const Index d = b.order();
    Dims dims(d);
    for (Index k = 0; k < d; ++k) dims[k] = b.dim(k) * c.dim(k);
    std::vector<double> out(checked_element_count(dims, "kronecker"));

    // Output stride of mode k.
    std::vector<Index> stride(d);
    Index s = 1;
    for (Index k = 0; k < d; ++k) {
        stride[k] = s;
        s *= dims[k];
    }

    std::vector<Index> ib(d, 0);
    for (Index pb = 0; pb < b.size(); ++pb) {
        // Base offset contributed by b's (slow) part of each merged index.
        Index base = 0;
        for (Index k = 0; k < d; ++k) base += ib[k] * c.dim(k) * stride[k];
        const double bv = b[pb];

        std::vector<Index> ic(d, 0);
        Index off = base;
        for (Index pc = 0; pc < c.size(); ++pc) {
            out[off] = bv * c[pc];
            for (Index k = 0; k < d; ++k) {
                if (++ic[k] < c.dim(k)) {
                    off += stride[k];
                    break;
                }
                off -= stride[k] * (c.dim(k) - 1);
                ic[k] = 0;
            }
        }
        for (Index k = 0; k < d; ++k) {
            if (++ib[k] < b.dim(k)) break;
            ib[k] = 0;
        }
    }
    return DenseTensor(std::move(dims), std::move(out));
}

Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError(fmt::format("khatri_rao: column counts differ ({} vs {})", a.cols(), b.cols()));
    }
    const Index rows = static_cast<Index>(a.rows() * b.rows());
    const Index cols = static_cast<Index>(a.cols());
    checked_element_count(std::vector<Index>{rows, cols}, "khatri_rao");
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols());
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            out.col(k).segment(i * b.rows(), b.rows()) = a(i, k) * b.col(k);
        }
    }
    return out;
}

DenseTensor colwise_outer(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError(fmt::format("colwise_outer: column counts differ ({} vs {})", a.cols(), b.cols()));
    }
    const auto n = static_cast<Index>(a.rows());
    const auto m = static_cast<Index>(b.rows());
    const auto l = static_cast<Index>(a.cols());
    Dims dims{n, m, l};
    std::vector<double> out(checked_element_count(dims, "colwise_outer"));
    for (Index k = 0; k < l; ++k) {
        Eigen::Map<Eigen::MatrixXd> slice(out.data() + k * n * m, a.rows(), b.rows());
        slice.noalias() = a.col(k) * b.col(k).transpose();
    }
    return DenseTensor(std::move(dims), std::move(out));
}

Eigen::VectorXd repeated_kron(const Eigen::VectorXd& u, Index d) {
    if (d < 1) {
        throw ParameterError("repeated_kron: repetition count must be at least 1");
    }
    const auto n = static_cast<Index>(u.size());
    Dims dims(d, n);
    checked_element_count(dims, "repeated_kron");
    Eigen::VectorXd out = u;
    for (Index k = 1; k < d; ++k) {
        Eigen::VectorXd next(out.size() * u.size());
        // kron(out, u): the right factor's index runs fastest.
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            next.segment(i * u.size(), u.size()) = out(i) * u;
        }
        out = std::move(next);
    }
    return out;
}

}  // namespace tnkf
