#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tnkf/dense_tensor.hpp"

namespace tnkf {

/// Textbook Kalman filter on explicit matrices: one column of `mean` and
/// one covariance matrix per batch member. Oracle for the TT filter.
struct DenseKalmanState {
    Eigen::MatrixXd mean;              // N x l
    std::vector<Eigen::MatrixXd> cov;  // l matrices, N x N
};

/// Zero mean and covariance variances[i] * I_N. Throws SizeGuardError for large N.
DenseKalmanState dense_initial_state(std::span<const double> variances, Index state_size);

/**
 * Predict with x+ = A x, P+ = A P A^T + diag(Q_i), then update with the
 * scalar measurement y_i = c x_i + r_i for each batch member i.
 *
 * `transition` empty means A = I. `process_noise` is either empty (Q = 0)
 * or holds one diagonal (length N) per batch member.
 */
DenseKalmanState dense_kalman_step(const DenseKalmanState& state, const std::optional<Eigen::MatrixXd>& transition,
                                   const Eigen::VectorXd& c, const std::vector<Eigen::VectorXd>& process_noise,
                                   std::span<const double> measurement_noise, std::span<const double> y);

}  // namespace tnkf
