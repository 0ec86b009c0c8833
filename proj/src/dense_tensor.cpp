#include "tnkf/dense_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "tnkf/errors.hpp"

namespace tnkf {

Index element_count(std::span<const Index> dims) {
    Index count = 1;
    for (Index n : dims) {
        if (n != 0 && count > std::numeric_limits<Index>::max() / n) {
            return std::numeric_limits<Index>::max();
        }
        count *= n;
    }
    return count;
}

Index checked_element_count(std::span<const Index> dims, const char* what) {
    const Index count = element_count(dims);
    if (count > kDenseSizeGuard) {
        throw SizeGuardError(fmt::format("{}: dense size {} exceeds the guard of {} elements (dims {})",
                                         what, count, kDenseSizeGuard, fmt::join(dims, "x")));
    }
    return count;
}

Index multi_to_linear(std::span<const Index> indices, std::span<const Index> dims) {
    if (indices.size() != dims.size()) {
        throw DimensionError(fmt::format("multi-index has {} entries, tensor has {} modes",
                                         indices.size(), dims.size()));
    }
    Index linear = 0;
    Index stride = 1;
    for (Index k = 0; k < dims.size(); ++k) {
        if (indices[k] < 1 || indices[k] > dims[k]) {
            throw BoundsError(fmt::format("index {} out of range [1, {}] in mode {}",
                                         indices[k], dims[k], k + 1));
        }
        linear += (indices[k] - 1) * stride;
        stride *= dims[k];
    }
    return linear + 1;
}

std::vector<Index> linear_to_multi(Index linear, std::span<const Index> dims) {
    const Index count = element_count(dims);
    if (linear < 1 || linear > count) {
        throw BoundsError(fmt::format("linear index {} out of range [1, {}]", linear, count));
    }
    std::vector<Index> indices(dims.size());
    Index rest = linear - 1;
    for (Index k = 0; k < dims.size(); ++k) {
        indices[k] = rest % dims[k] + 1;
        rest /= dims[k];
    }
    return indices;
}

namespace {

void validate_dims(const Dims& dims) {
    if (dims.empty()) {
        throw DimensionError("tensor must have at least one mode");
    }
    for (Index k = 0; k < dims.size(); ++k) {
        if (dims[k] == 0) {
            throw DimensionError(fmt::format("mode {} has zero dimension", k + 1));
        }
    }
}

}  // namespace

DenseTensor::DenseTensor() : dims_{1}, data_(std::make_shared<const std::vector<double>>(1, 0.0)) {}

DenseTensor::DenseTensor(Dims dims) : dims_(std::move(dims)) {
    validate_dims(dims_);
    data_ = std::make_shared<const std::vector<double>>(checked_element_count(dims_, "DenseTensor"), 0.0);
}

DenseTensor::DenseTensor(Dims dims, std::vector<double> data) : dims_(std::move(dims)) {
    validate_dims(dims_);
    const Index count = element_count(dims_);
    if (data.size() != count) {
        throw DimensionError(fmt::format("data length {} does not match dims {} (= {})", data.size(),
                                         fmt::join(dims_, "x"), count));
    }
    data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

DenseTensor DenseTensor::from_matrix(const Eigen::MatrixXd& m) {
    std::vector<double> data(m.data(), m.data() + m.size());
    return DenseTensor({static_cast<Index>(m.rows()), static_cast<Index>(m.cols())}, std::move(data));
}

DenseTensor DenseTensor::from_vector(const Eigen::VectorXd& v) {
    std::vector<double> data(v.data(), v.data() + v.size());
    return DenseTensor({static_cast<Index>(v.size())}, std::move(data));
}

double DenseTensor::at(std::span<const Index> indices) const {
    return (*data_)[multi_to_linear(indices, dims_) - 1];
}

DenseTensor DenseTensor::reshape(Dims dims) const {
    validate_dims(dims);
    if (element_count(dims) != size()) {
        throw DimensionError(fmt::format("cannot reshape {} into {}", fmt::join(dims_, "x"), fmt::join(dims, "x")));
    }
    DenseTensor out = *this;
    out.dims_ = std::move(dims);
    return out;
}

DenseTensor DenseTensor::permute(std::span<const Index> perm) const {
    const Index d = order();
    if (perm.size() != d) {
        throw DimensionError(fmt::format("permutation has {} entries, tensor has {} modes", perm.size(), d));
    }
    std::vector<bool> seen(d, false);
    for (Index p : perm) {
        if (p >= d || seen[p]) {
            throw DimensionError(fmt::format("invalid mode permutation {}", fmt::join(perm, ",")));
        }
        seen[p] = true;
    }

    Dims out_dims(d);
    for (Index k = 0; k < d; ++k) out_dims[k] = dims_[perm[k]];

    // Strides of the input modes, visited in output order.
    std::vector<Index> in_stride(d);
    Index stride = 1;
    for (Index k = 0; k < d; ++k) {
        in_stride[k] = stride;
        stride *= dims_[k];
    }
    std::vector<Index> step(d);
    for (Index k = 0; k < d; ++k) step[k] = in_stride[perm[k]];

    std::vector<double> out(size());
    std::vector<Index> counter(d, 0);
    Index src = 0;
    const auto& in = *data_;
    for (Index dst = 0; dst < out.size(); ++dst) {
        out[dst] = in[src];
        for (Index k = 0; k < d; ++k) {
            if (++counter[k] < out_dims[k]) {
                src += step[k];
                break;
            }
            src -= step[k] * (out_dims[k] - 1);
            counter[k] = 0;
        }
    }
    return DenseTensor(std::move(out_dims), std::move(out));
}

Eigen::Map<const Eigen::MatrixXd> DenseTensor::as_matrix(Index rows, Index cols) const {
    if (rows * cols != size()) {
        throw DimensionError(fmt::format("cannot view {} elements as a {}x{} matrix", size(), rows, cols));
    }
    return {data_->data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Eigen::MatrixXd DenseTensor::to_matrix() const {
    if (order() == 1) return as_matrix(dims_[0], 1);
    if (order() == 2) return as_matrix(dims_[0], dims_[1]);
    throw DimensionError(fmt::format("to_matrix needs a 1- or 2-way tensor, got order {}", order()));
}

double DenseTensor::frobenius_norm() const {
    const auto& v = *data_;
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).norm();
}

}  // namespace tnkf
