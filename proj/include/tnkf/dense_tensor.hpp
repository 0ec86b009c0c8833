#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tnkf {

using Index = std::size_t;
using Dims = std::vector<Index>;

/// Largest element count any dense object (tensor, matrix, covariance) may have.
/// Dense code is an oracle path; it refuses anything larger.
inline constexpr Index kDenseSizeGuard = Index{1} << 24;

/// Product of all dimensions. Throws SizeGuardError if it exceeds kDenseSizeGuard.
Index checked_element_count(std::span<const Index> dims, const char* what);

/// Product of all dimensions without a guard (saturates at SIZE_MAX).
Index element_count(std::span<const Index> dims);

/**
 * Linear index of a multi-index, both 1-based:
 *
 *   i_1 + (i_2 - 1) n_1 + ... + (i_k - 1) n_1 n_2 ... n_{k-1}
 *
 * The first index runs fastest. This pair of functions is the only place
 * where 1-based indices are converted to 0-based storage offsets.
 */
Index multi_to_linear(std::span<const Index> indices, std::span<const Index> dims);

/// Inverse of multi_to_linear.
std::vector<Index> linear_to_multi(Index linear, std::span<const Index> dims);

/**
 * Immutable d-way array of doubles stored with the first index fastest.
 *
 * The element buffer is shared between copies (and between reshapes), so
 * copying a tensor or a tensor train is cheap and identical cores may share
 * one buffer.
 */
class DenseTensor {
public:
    /// A single zero, dims (1).
    DenseTensor();
    /// Zero tensor of the given dimensions.
    explicit DenseTensor(Dims dims);
    /// Takes ownership of existing data; only the zero-filling constructor is size guarded.
    DenseTensor(Dims dims, std::vector<double> data);

    /// Column-major copy of a matrix as a 2-way tensor.
    static DenseTensor from_matrix(const Eigen::MatrixXd& m);
    static DenseTensor from_vector(const Eigen::VectorXd& v);

    const Dims& dims() const { return dims_; }
    Index dim(Index mode) const { return dims_.at(mode); }
    Index order() const { return dims_.size(); }
    Index size() const { return data_->size(); }

    std::span<const double> data() const { return {data_->data(), data_->size()}; }
    double operator[](Index offset) const { return (*data_)[offset]; }

    /// Element at a 1-based multi-index.
    double at(std::span<const Index> indices) const;
    double at(std::initializer_list<Index> indices) const {
        return at(std::span<const Index>(indices.begin(), indices.size()));
    }

    /// Same elements, new dimensions (same element count). Shares storage.
    DenseTensor reshape(Dims dims) const;

    /// Mode permutation; result mode k is input mode perm[k] (0-based modes).
    DenseTensor permute(std::span<const Index> perm) const;
    DenseTensor permute(std::initializer_list<Index> perm) const {
        return permute(std::span<const Index>(perm.begin(), perm.size()));
    }

    /// Column-major view of the flat data as a rows x cols matrix.
    Eigen::Map<const Eigen::MatrixXd> as_matrix(Index rows, Index cols) const;

    /// Copy of a 1- or 2-way tensor as a matrix (vectors become a column).
    Eigen::MatrixXd to_matrix() const;

    double frobenius_norm() const;

    bool shares_storage_with(const DenseTensor& other) const { return data_ == other.data_; }
    const void* storage_id() const { return data_.get(); }

private:
    Dims dims_;
    std::shared_ptr<const std::vector<double>> data_;
};

}  // namespace tnkf
