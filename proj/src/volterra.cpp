#include "tnkf/volterra.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "tnkf/errors.hpp"
#include "tnkf/rng.hpp"

namespace tnkf::volterra {

void SystemSize::validate() const {
    if (inputs < 1 || outputs < 1 || memory < 1 || degree < 1) {
        throw ParameterError(fmt::format("Volterra sizes must all be >= 1 (p={}, l={}, M={}, d={})", inputs, outputs,
                                         memory, degree));
    }
}

void VolterraSpec::validate() const {
    size.validate();
    if (kernel.order() != size.degree || kernel.mode_sizes() != size.modes()) {
        throw DimensionError("Volterra kernel modes must all equal pM+1, one per degree");
    }
    if (kernel.batch() != size.outputs) {
        throw DimensionError(
            fmt::format("Volterra kernel batch {} does not match {} outputs", kernel.batch(), size.outputs));
    }
}

void IoRecord::validate(Index memory) const {
    if (u.cols() != y.cols()) {
        throw DimensionError(fmt::format("input has {} samples, output has {}", u.cols(), y.cols()));
    }
    if (samples() <= memory) {
        throw DimensionError(fmt::format("record has {} samples; needs more than the memory {}", samples(), memory));
    }
}

Eigen::VectorXd build_ut(const Eigen::MatrixXd& u, Index t, Index memory) {
    const auto p = static_cast<Index>(u.rows());
    if (t >= static_cast<Index>(u.cols())) {
        throw BoundsError(fmt::format("sample {} out of range for a record of {} samples", t, u.cols()));
    }
    Eigen::VectorXd ut = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p * memory + 1));
    ut(0) = 1.0;
    for (Index lag = 0; lag < memory && lag <= t; ++lag) {
        for (Index ch = 0; ch < p; ++ch) {
            ut(static_cast<Eigen::Index>(1 + ch + p * lag)) =
                u(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(t - lag));
        }
    }
    return ut;
}

std::vector<double> simulate(const VolterraSpec& spec, const Eigen::MatrixXd& u, Index t) {
    if (static_cast<Index>(u.rows()) != spec.size.inputs) {
        throw DimensionError(fmt::format("simulate: {} input channels, model expects {}", u.rows(), spec.size.inputs));
    }
    const Eigen::VectorXd ut = build_ut(u, t, spec.size.memory);
    if (static_cast<Index>(ut.size()) != spec.kernel.mode_sizes().front()) {
        throw DimensionError("simulate: kernel mode size does not match pM+1");
    }
    Eigen::MatrixXd w;
    for (Index k = 0; k < spec.kernel.order(); ++k) {
        const auto& core = spec.kernel.core(k);
        const Index r0 = core.dim(0), n = core.dim(1), r1 = core.dim(2);
        // Core contracted with u_t over its middle mode: r0 x r1.
        Eigen::MatrixXd g(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(r1));
        for (Index b = 0; b < r1; ++b) {
            g.col(static_cast<Eigen::Index>(b)) = core.as_matrix(r0, n * r1).middleCols(
                                                      static_cast<Eigen::Index>(n * b), static_cast<Eigen::Index>(n)) *
                                                  ut;
        }
        w = k == 0 ? g : Eigen::MatrixXd(w * g);
    }
    return std::vector<double>(w.data(), w.data() + w.size());
}

Eigen::MatrixXd simulate_range(const VolterraSpec& spec, const Eigen::MatrixXd& u, Index begin, Index end) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(spec.kernel.batch()), static_cast<Eigen::Index>(end - begin));
    for (Index t = begin; t < end; ++t) {
        const auto y = simulate(spec, u, t);
        for (Index i = 0; i < y.size(); ++i) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t - begin)) = y[i];
        }
    }
    return out;
}

double relative_error(const TensorTrain& truth, const TensorTrain& estimate) {
    const double denom = frobenius_norm(truth);
    return frobenius_norm(tt_add(truth, scale(estimate, -1.0))) / denom;
}

double rmse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("rmse: shape mismatch");
    return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

IdentifyResult identify(const SystemSize& size, const IoRecord& data, const ModelSpec& model,
                        const RoundingPolicy& policy, std::span<const double> variances,
                        const IdentifyOptions& options) {
    size.validate();
    data.validate(size.memory);
    if (data.inputs() != size.inputs || data.outputs() != size.outputs) {
        throw DimensionError(fmt::format("record has {} inputs / {} outputs, model expects {} / {}", data.inputs(),
                                         data.outputs(), size.inputs, size.outputs));
    }
    if (variances.size() != size.outputs) {
        throw DimensionError("identify: need one initial variance per output");
    }
    const Index steps = options.steps.value_or(data.samples());
    if (steps > data.samples()) {
        throw DimensionError(fmt::format("identify: {} steps requested, record has {} samples", steps, data.samples()));
    }
    if (options.truth && (options.truth->batch() != size.outputs || options.truth->mode_sizes() != size.modes())) {
        throw DimensionError("identify: true kernel shape does not match the model sizes");
    }

    IdentifyResult result{{size, zeros_tt(size.outputs, size.modes())},
                          initial_state(variances, size.modes(), policy),
                          {}};
    result.metrics.reserve(steps);
    std::vector<double> y(size.outputs);
    StepInfo info;
    for (Index t = 0; t < steps; ++t) {
        for (Index i = 0; i < size.outputs; ++i) {
            y[i] = data.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
        }
        const auto start = std::chrono::steady_clock::now();
        const TensorTrain c = rank1_tt_from_vector(build_ut(data.u, t, size.memory), size.degree);
        result.state = step(result.state, model, c, y, &info);
        const auto stop = std::chrono::steady_clock::now();

        StepMetrics m;
        m.t = t;
        m.rel_err = options.truth ? relative_error(*options.truth, result.state.mean)
                                  : std::numeric_limits<double>::quiet_NaN();
        m.innovation = info.innovation;
        m.innovation_variance = info.innovation_variance;
        m.mean_ranks = result.state.mean.ranks();
        m.cov_ranks = result.state.cov.ranks();
        m.step_seconds = std::chrono::duration<double>(stop - start).count();
        m.zero_padded = t + 1 < size.memory;
        if (options.on_step) options.on_step(m, result.state);
        result.metrics.push_back(std::move(m));
    }
    result.model.kernel = result.state.mean;
    return result;
}

SyntheticSystem gen_rank1_system(Index memory, Index degree, Index samples, double noise_variance,
                                 std::uint64_t seed) {
    if (memory < 1 || degree < 1 || samples <= memory) {
        throw ParameterError("gen_rank1_system: need memory, degree >= 1 and samples > memory");
    }
    if (!(noise_variance >= 0.0)) throw ParameterError("gen_rank1_system: noise variance must be >= 0");
    Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(memory + 1);
    const auto count = static_cast<Eigen::Index>(samples);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    Eigen::MatrixXd u(1, count);
    for (Eigen::Index t = 0; t < count; ++t) u(0, t) = rng.normal();
    Eigen::MatrixXd y(1, count);
    const double noise_sd = std::sqrt(noise_variance);
    for (Eigen::Index t = 0; t < count; ++t) {
        const double lin = build_ut(u, static_cast<Index>(t), memory).dot(v);
        y(0, t) = std::pow(lin, static_cast<double>(degree)) + noise_sd * rng.normal();
    }
    return {{std::move(u), std::move(y), std::nullopt}, rank1_tt_from_vector(v, degree), v};
}

SyntheticSystem gen_experiment1(std::uint64_t seed) {
    return gen_rank1_system(kExperiment1Memory, kExperiment1Degree, kExperiment1Samples, kExperiment1NoiseVariance,
                            seed);
}

MixerData gen_mixer(std::uint64_t seed, double snr_db) {
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
        throw ParameterError("gen_mixer: SNR must be finite (or +inf for a noise-free record)");
    }
    const auto count = static_cast<Eigen::Index>(kMixerSamples);
    Eigen::MatrixXd u(2, count);
    Eigen::RowVectorXd reference(count);
    const double two_pi = 2.0 * std::numbers::pi;
    for (Eigen::Index k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) / kMixerSampleRate;
        const double lo = std::sin(two_pi * kMixerLoHz * t);
        const double carrier = std::sin(two_pi * kMixerIfHz * t - std::numbers::pi / 8.0);
        const double sq = carrier >= 0.0 ? 1.0 : -1.0;
        u(0, k) = lo;
        u(1, k) = sq;
        reference(k) = lo * sq;
    }

    MixerData data{{u, reference, kMixerSampleRate}, reference, 0.0};
    if (std::isinf(snr_db)) return data;

    Rng rng(seed);
    Eigen::RowVectorXd noise(count);
    for (Eigen::Index k = 0; k < count; ++k) noise(k) = rng.normal();
    const double signal_power = reference.squaredNorm() / static_cast<double>(count);
    const double target_power = signal_power / std::pow(10.0, snr_db / 10.0);
    const double drawn_power = noise.squaredNorm() / static_cast<double>(count);
    noise *= std::sqrt(target_power / drawn_power);
    data.record.y.row(0) += noise;
    data.noise_variance = target_power;
    return data;
}

}  // namespace tnkf::volterra
