#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tnkf/kalman.hpp"
#include "tnkf/tensor_train.hpp"

namespace tnkf::volterra {

/// Sizes of a discrete-time MIMO Volterra system.
struct SystemSize {
    Index inputs = 1;   // p
    Index outputs = 1;  // l
    Index memory = 1;   // M
    Index degree = 1;   // d

    /// Length of u_t: p M + 1.
    Index input_vector_size() const { return inputs * memory + 1; }
    Dims modes() const { return Dims(degree, input_vector_size()); }
    void validate() const;
};

/// Volterra system whose l x (pM+1) x ... x (pM+1) kernel tensor is held as a batched TT.
struct VolterraSpec {
    SystemSize size;
    TensorTrain kernel;

    void validate() const;
};

/// Input/output samples: u is p x T, y is l x T. Column t is sample t (0-based).
struct IoRecord {
    Eigen::MatrixXd u;
    Eigen::MatrixXd y;
    std::optional<double> sample_rate;

    Index samples() const { return static_cast<Index>(u.cols()); }
    Index inputs() const { return static_cast<Index>(u.rows()); }
    Index outputs() const { return static_cast<Index>(y.rows()); }
    void validate(Index memory) const;
};

/**
 * u_t = (1, u_1(t), ..., u_p(t), u_1(t-1), ..., u_p(t-M+1)).
 *
 * Samples before the start of the record are taken as zero.
 */
Eigen::VectorXd build_ut(const Eigen::MatrixXd& u, Index t, Index memory);

/// Output at sample t: the chain (V1 x_2 u_t^T)(V2 x_2 u_t^T)...(Vd x_2 u_t^T).
std::vector<double> simulate(const VolterraSpec& spec, const Eigen::MatrixXd& u, Index t);

/// Outputs for samples [begin, end) as an l x (end - begin) matrix.
Eigen::MatrixXd simulate_range(const VolterraSpec& spec, const Eigen::MatrixXd& u, Index begin, Index end);

struct StepMetrics {
    Index t = 0;
    /// ||V_true - M(t)||_F / ||V_true||_F, NaN when no true kernel is known.
    double rel_err = 0.0;
    std::vector<double> innovation;
    std::vector<double> innovation_variance;
    Dims mean_ranks;
    Dims cov_ranks;
    double step_seconds = 0.0;
    /// u_t used zero-padded history (t < M - 1).
    bool zero_padded = false;
};

struct IdentifyOptions {
    /// Number of samples to filter, starting at sample 0. Defaults to the whole record.
    std::optional<Index> steps;
    std::optional<TensorTrain> truth;
    std::function<void(const StepMetrics&, const KalmanState&)> on_step;
};

struct IdentifyResult {
    VolterraSpec model;
    KalmanState state;
    std::vector<StepMetrics> metrics;
};

/**
 * Recursive identification: the kernel coefficients are the state of a
 * linear state-space model with measurement row c(t) = (u_t^{(x)d})^T,
 * estimated with the TT Kalman filter from zero mean and
 * P(0) = diag(variances) (x) I.
 */
IdentifyResult identify(const SystemSize& size, const IoRecord& data, const ModelSpec& model,
                        const RoundingPolicy& policy, std::span<const double> variances,
                        const IdentifyOptions& options = {});

/// Relative Frobenius distance ||truth - estimate|| / ||truth|| between two batched trains.
double relative_error(const TensorTrain& truth, const TensorTrain& estimate);

double rmse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Synthetic data.

struct SyntheticSystem {
    IoRecord record;
    TensorTrain kernel;      // rank-1 kernel factor^{(x)d}
    Eigen::VectorXd factor;  // length M + 1
};

/**
 * SISO system y(t) = (u_t^T v)^d + r(t) with v and u(t) i.i.d. standard
 * normal and r(t) ~ N(0, noise_variance). Draw order: v, then all inputs,
 * then all noise samples.
 */
SyntheticSystem gen_rank1_system(Index memory, Index degree, Index samples, double noise_variance,
                                 std::uint64_t seed);

/// Degree-4, memory-4 SISO system with 1000 samples and noise variance 1e-2 (625 kernel coefficients).
SyntheticSystem gen_experiment1(std::uint64_t seed);

inline constexpr Index kExperiment1Memory = 4;
inline constexpr Index kExperiment1Degree = 4;
inline constexpr Index kExperiment1Samples = 1000;
inline constexpr double kExperiment1NoiseVariance = 1e-2;

struct MixerData {
    IoRecord record;              // u = (lo, if), y = noisy output
    Eigen::RowVectorXd reference;  // noise-free output
    double noise_variance = 0.0;
};

inline constexpr double kMixerSampleRate = 5000.0;
inline constexpr Index kMixerSamples = 6000;
inline constexpr double kMixerLoHz = 100.0;
inline constexpr double kMixerIfHz = 300.0;

/**
 * Mixer data: lo(t) = sin(2 pi 100 t), if(t) = sign(sin(2 pi 300 t - pi/8))
 * with sign(0) = 1, sampled at 5 kHz for 6000 samples. The reference output
 * is lo(t) * if(t). Gaussian noise is rescaled so that the record's SNR is
 * exactly snr_db; an infinite snr_db adds no noise.
 */
MixerData gen_mixer(std::uint64_t seed, double snr_db);

}  // namespace tnkf::volterra
