#include "tnkf/dense_kalman.hpp"

#include <fmt/format.h>

#include "tnkf/errors.hpp"

namespace tnkf {

DenseKalmanState dense_initial_state(std::span<const double> variances, Index state_size) {
    checked_element_count(Dims{state_size, state_size}, "dense Kalman covariance");
    const auto n = static_cast<Eigen::Index>(state_size);
    DenseKalmanState state{Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(variances.size())), {}};
    for (double v : variances) {
        if (!(v > 0.0)) throw ParameterError(fmt::format("initial variances must be positive, got {}", v));
        state.cov.push_back(v * Eigen::MatrixXd::Identity(n, n));
    }
    return state;
}

DenseKalmanState dense_kalman_step(const DenseKalmanState& state, const std::optional<Eigen::MatrixXd>& transition,
                                   const Eigen::VectorXd& c, const std::vector<Eigen::VectorXd>& process_noise,
                                   std::span<const double> measurement_noise, std::span<const double> y) {
    const Eigen::Index n = state.mean.rows();
    const auto l = static_cast<Index>(state.mean.cols());
    checked_element_count(Dims{static_cast<Index>(n), static_cast<Index>(n)}, "dense Kalman covariance");
    if (state.cov.size() != l || y.size() != l || measurement_noise.size() != l) {
        throw DimensionError("dense_kalman_step: batch sizes of mean, covariance, y and R differ");
    }
    if (c.size() != n) throw DimensionError("dense_kalman_step: measurement vector length mismatch");
    if (transition && (transition->rows() != n || transition->cols() != n)) {
        throw DimensionError("dense_kalman_step: transition matrix has the wrong size");
    }
    if (!process_noise.empty() && process_noise.size() != l) {
        throw DimensionError("dense_kalman_step: process noise needs one diagonal per batch member");
    }

    DenseKalmanState next;
    next.mean.resize(n, static_cast<Eigen::Index>(l));
    for (Index i = 0; i < l; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        Eigen::VectorXd m = state.mean.col(col);
        Eigen::MatrixXd p = state.cov[i];
        if (transition) {
            m = *transition * m;
            p = *transition * p * transition->transpose();
        }
        if (!process_noise.empty()) p.diagonal() += process_noise[i];

        const double v = y[i] - c.dot(m);
        const Eigen::VectorXd pc = p * c;
        const double s = c.dot(pc) + measurement_noise[i];
        if (!(s > 0.0)) throw CovarianceError(fmt::format("dense innovation variance s[{}] = {}", i, s));
        const Eigen::VectorXd k = pc / s;
        next.mean.col(col) = m + k * v;
        next.cov.push_back(p - s * k * k.transpose());
    }
    return next;
}

}  // namespace tnkf
