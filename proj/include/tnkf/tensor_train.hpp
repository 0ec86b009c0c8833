#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tnkf/dense_tensor.hpp"

namespace tnkf {

/**
 * Truncation settings for TT rounding.
 *
 * `tolerance` is a relative Frobenius budget for the whole tensor: the
 * rounded train differs from the input by at most tolerance * ||x||_F.
 * A tolerance of zero only drops numerically zero singular values.
 */
struct RoundingPolicy {
    double tolerance = 0.0;
    std::optional<Index> max_rank;

    static RoundingPolicy exact() { return {}; }
    void validate() const;
};

/**
 * Tensor train with an extended first core.
 *
 * Core k has dims (r_{k-1}, n_k, r_k). The first core is (l, n_1, r_1): its
 * leading mode is a batch index, so the train represents l tensors of
 * dims n_1 x ... x n_d at once (an n^d x l matrix when vectorized). l == 1
 * is an ordinary TT. The last rank r_d is always 1.
 */
class TensorTrain {
public:
    explicit TensorTrain(std::vector<DenseTensor> cores);

    Index order() const { return cores_.size(); }
    Index batch() const { return cores_.front().dim(0); }
    Dims mode_sizes() const;
    /// Interior ranks r_1 .. r_{d-1} (empty for d == 1).
    Dims ranks() const;
    Index max_rank() const;

    const std::vector<DenseTensor>& cores() const { return cores_; }
    const DenseTensor& core(Index k) const { return cores_.at(k); }

    /// Number of stored doubles, counting a buffer shared by several cores once.
    Index storage() const;

private:
    std::vector<DenseTensor> cores_;
};

/**
 * TT-matrix with an extended first core.
 *
 * Core k has dims (r_{k-1}, rows_k, cols_k, r_k); the first core's leading
 * mode is again a batch index, so the train holds l matrices of size
 * prod(rows) x prod(cols). Row and column multi-indices are linearized with
 * the first mode fastest.
 */
class TTMatrix {
public:
    explicit TTMatrix(std::vector<DenseTensor> cores);

    Index order() const { return cores_.size(); }
    Index batch() const { return cores_.front().dim(0); }
    Dims row_sizes() const;
    Dims col_sizes() const;
    Dims ranks() const;
    Index max_rank() const;

    const std::vector<DenseTensor>& cores() const { return cores_; }
    const DenseTensor& core(Index k) const { return cores_.at(k); }
    Index storage() const;

    /// View as a TT whose mode k is the merged (row_k, col_k) index, row fastest.
    TensorTrain as_tensor_train() const;
    static TTMatrix from_tensor_train(const TensorTrain& tt, const Dims& rows, const Dims& cols);

private:
    std::vector<DenseTensor> cores_;
};

// Dense bridges (oracle use only; subject to kDenseSizeGuard).

/// Dense tensor of dims (l, n_1, ..., n_d).
DenseTensor contract_full(const TensorTrain& tt);
/// Dense tensor of dims (l, N_rows, N_cols): slice i is batch matrix i.
DenseTensor contract_full(const TTMatrix& ttm);

/// The represented n^d x l matrix (column i is batch member i).
Eigen::MatrixXd to_dense_matrix(const TensorTrain& tt);
/// Batch member `batch_index` (0-based) of a TT-matrix as a dense matrix.
Eigen::MatrixXd to_dense_matrix(const TTMatrix& ttm, Index batch_index);

/// TT-SVD of a dense tensor of dims (n_1..n_d); the result has batch 1.
TensorTrain tt_from_dense(const DenseTensor& x, const RoundingPolicy& policy);
/// TT-SVD of a dense tensor of dims (l, n_1..n_d) keeping the leading mode as batch index.
TensorTrain tt_from_dense_batched(const DenseTensor& x, const RoundingPolicy& policy);

/// Sum by core concatenation; ranks add.
TensorTrain tt_add(const TensorTrain& a, const TensorTrain& b);
TTMatrix tt_add(const TTMatrix& a, const TTMatrix& b);

/// Multiply batch member i by weights[i] (touches the first core only).
TensorTrain scale_batch(const TensorTrain& tt, std::span<const double> weights);
TTMatrix scale_batch(const TTMatrix& ttm, std::span<const double> weights);
TensorTrain scale(const TensorTrain& tt, double factor);

/**
 * Rounding: a right-to-left QR sweep followed by a left-to-right truncated
 * SVD sweep. The per-SVD truncation threshold is
 * tolerance * ||x||_F / sqrt(d - 1).
 */
TensorTrain tt_round(const TensorTrain& tt, const RoundingPolicy& policy);
TTMatrix tt_round(const TTMatrix& ttm, const RoundingPolicy& policy);

/// Right-to-left QR sweep only: cores 2..d become right-orthogonal, i.e.
/// their r_{k-1} x (n_k r_k) unfoldings have orthonormal rows.
TensorTrain right_orthogonalize(const TensorTrain& tt);

/// Frobenius norm over all batch members, computed without densifying.
double frobenius_norm(const TensorTrain& tt);
double frobenius_norm(const TTMatrix& ttm);

/// Number of singular values kept by the rounding truncation rule.
/// `sigma` is sorted descending; `delta` is the absolute Frobenius budget.
Index truncation_rank(const Eigen::VectorXd& sigma, double delta, Index rows, Index cols,
                      const std::optional<Index>& max_rank);

// Structured initializers.

/// All-zero train with unit ranks: first core l x n_1 x 1, others 1 x n_k x 1.
TensorTrain zeros_tt(Index l, const Dims& modes);

/// Batch member i equals variances[i] * I; unit ranks, identity cores after the first.
TTMatrix scaled_identity_ttm(std::span<const double> variances, const Dims& modes);

/// Unit-rank train whose d cores all share the single vector u (viewed as 1 x n x 1).
TensorTrain rank1_tt_from_vector(const Eigen::VectorXd& u, Index d);

}  // namespace tnkf
