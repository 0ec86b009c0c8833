#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tnkf/tensor_train.hpp"

namespace tnkf {

/**
 * State-space model for the tensor Kalman filter
 *
 *   X(t+1) = A(t) X(t) + W(t),   y(t) = c(t) X(t) + r(t)
 *
 * where X holds l state vectors of length n^d side by side. An empty
 * `transition` means A = I; an empty `process_noise` means Q = 0 (both
 * skip their contraction entirely).
 */
struct ModelSpec {
    std::optional<TTMatrix> transition;
    /// Batched diagonal process-noise covariances, usually from scaled_identity_ttm.
    std::optional<TTMatrix> process_noise;
    /// diag(R): one positive measurement-noise variance per batch member.
    std::vector<double> measurement_noise;
};

/// Mean M(t) (n^d x l, batched TT) and covariances P(t) (batched TT-matrix).
struct KalmanState {
    TensorTrain mean;
    TTMatrix cov;
    Index t = 0;
    RoundingPolicy policy;
};

/// Zero mean and P(0) = diag(variances) (x) I with unit ranks throughout.
KalmanState initial_state(std::span<const double> variances, const Dims& modes, const RoundingPolicy& policy);

/// Raw core-wise product A M (ranks multiply, r_M r_A), no rounding.
TensorTrain transition_product(const TensorTrain& mean, const TTMatrix& transition);
/// Raw core-wise product A P_i A^T for every batch member (ranks r_P r_A^2), no rounding.
TTMatrix congruence_product(const TTMatrix& cov, const TTMatrix& transition);
/// Raw P_i c^T for every batch member, as a batched TT (ranks r_P r_c), no rounding.
TensorTrain covariance_times_measurement(const TTMatrix& cov, const TensorTrain& c);
/// c m_i for every batch member of a batched TT (c has batch 1).
std::vector<double> measure(const TensorTrain& mean, const TensorTrain& c);

// Prediction.
TensorTrain predict_mean(const TensorTrain& mean, const TTMatrix& transition, const RoundingPolicy& policy);
TTMatrix predict_cov(const TTMatrix& cov, const std::optional<TTMatrix>& transition,
                     const std::optional<TTMatrix>& process_noise, const RoundingPolicy& policy);

// Update.
std::vector<double> innovation(std::span<const double> y, const TensorTrain& mean_pred, const TensorTrain& c);
/// s_i = c P_i c^T + R_i. Throws CovarianceError if any s_i is not positive.
std::vector<double> innovation_variance(const TTMatrix& cov_pred, const TensorTrain& c,
                                        std::span<const double> measurement_noise);
/// K with batch member i equal to P_i c^T / s_i.
TensorTrain kalman_gain(const TTMatrix& cov_pred, const TensorTrain& c, std::span<const double> s,
                        const RoundingPolicy& policy);
/// M+ + K diag(v), rounded.
TensorTrain update_mean(const TensorTrain& mean_pred, const TensorTrain& gain, std::span<const double> v,
                        const RoundingPolicy& policy);
/// K □ K: batch member i is k_i k_i^T, with ranks r_K^2.
TTMatrix kk_outer_tn(const TensorTrain& gain);
/// P+ - (K □ K) x_3 diag(s), rounded.
TTMatrix update_cov(const TTMatrix& cov_pred, const TensorTrain& gain, std::span<const double> s,
                    const RoundingPolicy& policy);

/// Per-step quantities reported by step().
struct StepInfo {
    std::vector<double> innovation;
    std::vector<double> innovation_variance;
};

/**
 * One predict/update cycle. Rounding happens after every rank-growing
 * operation: predict_mean, both halves of predict_cov, the gain, the mean
 * update and the covariance update.
 */
KalmanState step(const KalmanState& state, const ModelSpec& model, const TensorTrain& c, std::span<const double> y,
                 StepInfo* info = nullptr);

}  // namespace tnkf
