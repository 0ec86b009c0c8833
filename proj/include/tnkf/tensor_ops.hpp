#pragma once

#include <Eigen/Core>

#include "tnkf/dense_tensor.hpp"

namespace tnkf {

/// k-mode product t x_k m (k is 1-based). Mode k of t is contracted with
/// the columns of m and replaced by m.rows().
DenseTensor mode_k_product(const DenseTensor& t, const Eigen::MatrixXd& m, Index k);

/**
 * Tensor Kronecker product of two tensors of equal order.
 *
 * Mode k of the result has dimension n_k m_k and merged index [i_c i_b],
 * where the index into c runs fastest:
 *
 *   a_{[i_1 i_{d+1}] ... [i_d i_{2d}]} = b_{i_{d+1} ... i_{2d}} c_{i_1 ... i_d}
 *
 * For vectors and matrices this is the ordinary Kronecker product b (x) c.
 */
DenseTensor kronecker(const DenseTensor& b, const DenseTensor& c);

/// Column-wise Kronecker product of an n x l and an m x l matrix.
Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// n x m x l tensor whose slice (:,:,k) is the outer product a(:,k) b(:,k)^T.
DenseTensor colwise_outer(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// u (x) u (x) ... (x) u with d factors; length n^d.
Eigen::VectorXd repeated_kron(const Eigen::VectorXd& u, Index d);

}  // namespace tnkf
