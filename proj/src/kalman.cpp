#include "tnkf/kalman.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "tnkf/errors.hpp"
#include "tnkf/tensor_ops.hpp"

namespace tnkf {

namespace {

using Eigen::MatrixXd;

Eigen::Index ei(tnkf::Index i) { return static_cast<Eigen::Index>(i); }

void check_transition(const TTMatrix& a, const Dims& modes, const char* what) {
    if (a.batch() != 1) {
        throw DimensionError(fmt::format("{}: transition TT-matrix must have a unit leading rank", what));
    }
    if (a.col_sizes() != modes) {
        throw DimensionError(fmt::format("{}: transition columns {} do not match state modes {}", what,
                                         fmt::join(a.col_sizes(), "x"), fmt::join(modes, "x")));
    }
}

void check_measurement(const TensorTrain& c, const Dims& modes, const char* what) {
    if (c.batch() != 1) {
        throw DimensionError(fmt::format("{}: measurement train must have batch size 1", what));
    }
    if (c.mode_sizes() != modes) {
        throw DimensionError(fmt::format("{}: measurement modes {} do not match state modes {}", what,
                                         fmt::join(c.mode_sizes(), "x"), fmt::join(modes, "x")));
    }
}

// Slice (b, :, :, b') of a 4-way TT-matrix core as a rows x cols matrix.
MatrixXd matrix_slice(const DenseTensor& core, tnkf::Index b, tnkf::Index bp) {
    const tnkf::Index r0 = core.dim(0), nr = core.dim(1), nc = core.dim(2);
    MatrixXd m(ei(nr), ei(nc));
    auto data = core.data();
    for (tnkf::Index j = 0; j < nc; ++j)
        for (tnkf::Index i = 0; i < nr; ++i) m(ei(i), ei(j)) = data[b + r0 * (i + nr * (j + nc * bp))];
    return m;
}

std::vector<double> checked_inverse(std::span<const double> s) {
    if (s.empty()) throw DimensionError("innovation variance vector is empty");
    const double smax = *std::max_element(s.begin(), s.end());
    const double floor = 1e-12 * smax;
    std::vector<double> inv(s.size());
    for (tnkf::Index i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0.0) || s[i] < floor || !std::isfinite(s[i])) {
            throw CovarianceError(fmt::format(
                "innovation variance s[{}] = {} is not safely positive (floor {}); covariance lost definiteness",
                i, s[i], floor));
        }
        inv[i] = 1.0 / s[i];
    }
    return inv;
}

}  // namespace

KalmanState initial_state(std::span<const double> variances, const Dims& modes, const RoundingPolicy& policy) {
    policy.validate();
    return {zeros_tt(variances.size(), modes), scaled_identity_ttm(variances, modes), 0, policy};
}

TensorTrain transition_product(const TensorTrain& mean, const TTMatrix& transition) {
    check_transition(transition, mean.mode_sizes(), "transition_product");
    const tnkf::Index d = mean.order();
    std::vector<DenseTensor> cores;
    cores.reserve(d);
    for (tnkf::Index k = 0; k < d; ++k) {
        const auto& m = mean.core(k);
        const auto& a = transition.core(k);
        const tnkf::Index ra = m.dim(0), n_in = m.dim(1), rap = m.dim(2);
        const tnkf::Index rb = a.dim(0), n_out = a.dim(1), rbp = a.dim(3);
        const tnkf::Index left = ra * rb, right = rap * rbp;
        std::vector<double> out(left * n_out * right);
        for (tnkf::Index bp = 0; bp < rbp; ++bp) {
            for (tnkf::Index b = 0; b < rb; ++b) {
                const MatrixXd as = matrix_slice(a, b, bp);  // n_out x n_in
                for (tnkf::Index ap = 0; ap < rap; ++ap) {
                    // M(:, :, ap) as ra x n_in
                    Eigen::Map<const MatrixXd, 0, Eigen::OuterStride<>> ms(m.data().data() + ra * n_in * ap, ei(ra),
                                                                           ei(n_in), Eigen::OuterStride<>(ei(ra)));
                    const MatrixXd prod = ms * as.transpose();  // ra x n_out
                    const tnkf::Index q = ap + rap * bp;
                    for (tnkf::Index j = 0; j < n_out; ++j)
                        for (tnkf::Index a0 = 0; a0 < ra; ++a0)
                            out[(a0 + ra * b) + left * (j + n_out * q)] = prod(ei(a0), ei(j));
                }
            }
        }
        cores.emplace_back(Dims{left, n_out, right}, std::move(out));
    }
    return TensorTrain(std::move(cores));
}

TTMatrix congruence_product(const TTMatrix& cov, const TTMatrix& transition) {
    check_transition(transition, cov.row_sizes(), "congruence_product");
    if (transition.col_sizes() != cov.col_sizes()) {
        throw DimensionError("congruence_product: covariance must be square in every mode");
    }
    const tnkf::Index d = cov.order();
    std::vector<DenseTensor> cores;
    cores.reserve(d);
    for (tnkf::Index k = 0; k < d; ++k) {
        const auto& p = cov.core(k);
        const auto& a = transition.core(k);
        const tnkf::Index rp = p.dim(0), rpp = p.dim(3);
        const tnkf::Index rb = a.dim(0), ni = a.dim(1), rbp = a.dim(3);
        std::vector<MatrixXd> as(rb * rbp);
        for (tnkf::Index bp = 0; bp < rbp; ++bp)
            for (tnkf::Index b = 0; b < rb; ++b) as[b + rb * bp] = matrix_slice(a, b, bp);

        const tnkf::Index left = rp * rb * rb, right = rpp * rbp * rbp;
        std::vector<double> out(left * ni * ni * right);
        for (tnkf::Index ap = 0; ap < rpp; ++ap) {
            for (tnkf::Index a0 = 0; a0 < rp; ++a0) {
                const MatrixXd ps = matrix_slice(p, a0, ap);
                for (tnkf::Index bp = 0; bp < rbp; ++bp) {
                    for (tnkf::Index b = 0; b < rb; ++b) {
                        const MatrixXd t = as[b + rb * bp] * ps;
                        for (tnkf::Index gp = 0; gp < rbp; ++gp) {
                            for (tnkf::Index g = 0; g < rb; ++g) {
                                const MatrixXd s = t * as[g + rb * gp].transpose();
                                const tnkf::Index l_idx = a0 + rp * (b + rb * g);
                                const tnkf::Index r_idx = ap + rpp * (bp + rbp * gp);
                                for (tnkf::Index j = 0; j < ni; ++j)
                                    for (tnkf::Index i = 0; i < ni; ++i)
                                        out[l_idx + left * (i + ni * (j + ni * r_idx))] = s(ei(i), ei(j));
                            }
                        }
                    }
                }
            }
        }
        cores.emplace_back(Dims{left, ni, ni, right}, std::move(out));
    }
    return TTMatrix(std::move(cores));
}

TensorTrain covariance_times_measurement(const TTMatrix& cov, const TensorTrain& c) {
    check_measurement(c, cov.col_sizes(), "covariance_times_measurement");
    const tnkf::Index d = cov.order();
    std::vector<DenseTensor> cores;
    cores.reserve(d);
    for (tnkf::Index k = 0; k < d; ++k) {
        const auto& p = cov.core(k);
        const auto& ck = c.core(k);
        const tnkf::Index rp = p.dim(0), ni = p.dim(1), nj = p.dim(2), rpp = p.dim(3);
        const tnkf::Index rc = ck.dim(0), rcp = ck.dim(2);
        const tnkf::Index left = rp * rc, right = rpp * rcp;
        // P core as (rp ni) x (nj rpp); c core as rc x (nj rcp).
        const auto pm = p.as_matrix(rp * ni, nj * rpp);
        const auto cm = ck.as_matrix(rc, nj * rcp);
        std::vector<double> out(left * ni * right);
        for (tnkf::Index ap = 0; ap < rpp; ++ap) {
            for (tnkf::Index bp = 0; bp < rcp; ++bp) {
                const MatrixXd prod =
                    pm.middleCols(ei(nj * ap), ei(nj)) * cm.middleCols(ei(nj * bp), ei(nj)).transpose();
                const tnkf::Index q = ap + rpp * bp;
                for (tnkf::Index b = 0; b < rc; ++b)
                    for (tnkf::Index i = 0; i < ni; ++i)
                        for (tnkf::Index a0 = 0; a0 < rp; ++a0)
                            out[(a0 + rp * b) + left * (i + ni * q)] = prod(ei(a0 + rp * i), ei(b));
            }
        }
        cores.emplace_back(Dims{left, ni, right}, std::move(out));
    }
    return TensorTrain(std::move(cores));
}

std::vector<double> measure(const TensorTrain& mean, const TensorTrain& c) {
    check_measurement(c, mean.mode_sizes(), "measure");
    const tnkf::Index l = mean.batch();
    // w(z, a + ra * b): batch member z contracted up to the current bond (a of mean, b of c).
    MatrixXd w = MatrixXd::Identity(ei(l), ei(l));
    tnkf::Index ra = l, rc = 1;
    for (tnkf::Index k = 0; k < mean.order(); ++k) {
        const auto& m = mean.core(k);
        const auto& ck = c.core(k);
        const tnkf::Index n = m.dim(1), rap = m.dim(2), rcp = ck.dim(2);
        const auto mm = m.as_matrix(ra, n * rap);
        const auto cm = ck.as_matrix(rc * n, rcp);
        // t_b = w_b * M : l x (n rap), one per b.
        std::vector<MatrixXd> t(rc);
        for (tnkf::Index b = 0; b < rc; ++b) t[b] = w.middleCols(ei(ra * b), ei(ra)) * mm;
        MatrixXd next(ei(l), ei(rap * rcp));
        MatrixXd g(ei(l), ei(rc * n));
        for (tnkf::Index ap = 0; ap < rap; ++ap) {
            for (tnkf::Index i = 0; i < n; ++i)
                for (tnkf::Index b = 0; b < rc; ++b) g.col(ei(b + rc * i)) = t[b].col(ei(i + n * ap));
            const MatrixXd h = g * cm;  // l x rcp
            for (tnkf::Index bp = 0; bp < rcp; ++bp) next.col(ei(ap + rap * bp)) = h.col(ei(bp));
        }
        w = std::move(next);
        ra = rap;
        rc = rcp;
    }
    return std::vector<double>(w.data(), w.data() + w.size());
}

TensorTrain predict_mean(const TensorTrain& mean, const TTMatrix& transition, const RoundingPolicy& policy) {
    return tt_round(transition_product(mean, transition), policy);
}

TTMatrix predict_cov(const TTMatrix& cov, const std::optional<TTMatrix>& transition,
                     const std::optional<TTMatrix>& process_noise, const RoundingPolicy& policy) {
    TTMatrix out = transition ? tt_round(congruence_product(cov, *transition), policy) : cov;
    if (process_noise) {
        if (process_noise->batch() != cov.batch()) {
            throw DimensionError(fmt::format("predict_cov: process noise batch {} != covariance batch {}",
                                             process_noise->batch(), cov.batch()));
        }
        out = tt_round(tt_add(out, *process_noise), policy);
    }
    return out;
}

std::vector<double> innovation(std::span<const double> y, const TensorTrain& mean_pred, const TensorTrain& c) {
    if (y.size() != mean_pred.batch()) {
        throw DimensionError(fmt::format("innovation: {} measurements for batch size {}", y.size(), mean_pred.batch()));
    }
    std::vector<double> v = measure(mean_pred, c);
    for (tnkf::Index i = 0; i < v.size(); ++i) v[i] = y[i] - v[i];
    return v;
}

std::vector<double> innovation_variance(const TTMatrix& cov_pred, const TensorTrain& c,
                                        std::span<const double> measurement_noise) {
    if (measurement_noise.size() != cov_pred.batch()) {
        throw DimensionError(fmt::format("innovation_variance: {} noise variances for batch size {}",
                                         measurement_noise.size(), cov_pred.batch()));
    }
    std::vector<double> s = measure(covariance_times_measurement(cov_pred, c), c);
    for (tnkf::Index i = 0; i < s.size(); ++i) s[i] += measurement_noise[i];
    checked_inverse(s);
    return s;
}

TensorTrain kalman_gain(const TTMatrix& cov_pred, const TensorTrain& c, std::span<const double> s,
                        const RoundingPolicy& policy) {
    if (s.size() != cov_pred.batch()) {
        throw DimensionError("kalman_gain: innovation variance length does not match the batch size");
    }
    const std::vector<double> inv = checked_inverse(s);
    return tt_round(scale_batch(covariance_times_measurement(cov_pred, c), inv), policy);
}

TensorTrain update_mean(const TensorTrain& mean_pred, const TensorTrain& gain, std::span<const double> v,
                        const RoundingPolicy& policy) {
    return tt_round(tt_add(mean_pred, scale_batch(gain, v)), policy);
}

TTMatrix kk_outer_tn(const TensorTrain& gain) {
    const tnkf::Index d = gain.order();
    std::vector<DenseTensor> cores;
    cores.reserve(d);

    // First core: Khatri-Rao of the transposed l x (n r) unfolding with itself,
    // reshaped to n x r x n x r x l, permuted to l x n x n x r x r.
    const auto& k1 = gain.core(0);
    const tnkf::Index l = k1.dim(0), n = k1.dim(1), r = k1.dim(2);
    const MatrixXd k1t = k1.as_matrix(l, n * r).transpose();
    const DenseTensor k11 = DenseTensor::from_matrix(khatri_rao(k1t, k1t)).reshape({n, r, n, r, l});
    cores.push_back(k11.permute({4, 0, 2, 1, 3}).reshape({l, n, n, r * r}));

    for (tnkf::Index k = 1; k < d; ++k) {
        const auto& kk = gain.core(k);
        const tnkf::Index rl = kk.dim(0), nk = kk.dim(1), rr = kk.dim(2);
        cores.push_back(kronecker(kk, kk).reshape({rl * rl, nk, nk, rr * rr}));
    }
    return TTMatrix(std::move(cores));
}

TTMatrix update_cov(const TTMatrix& cov_pred, const TensorTrain& gain, std::span<const double> s,
                    const RoundingPolicy& policy) {
    if (s.size() != cov_pred.batch() || gain.batch() != cov_pred.batch()) {
        throw DimensionError("update_cov: batch sizes of covariance, gain and s differ");
    }
    std::vector<double> neg(s.begin(), s.end());
    for (double& x : neg) x = -x;
    return tt_round(tt_add(cov_pred, scale_batch(kk_outer_tn(gain), neg)), policy);
}

KalmanState step(const KalmanState& state, const ModelSpec& model, const TensorTrain& c, std::span<const double> y,
                 StepInfo* info) {
    const auto& policy = state.policy;
    if (state.mean.batch() != state.cov.batch() || state.mean.mode_sizes() != state.cov.row_sizes()) {
        throw DimensionError("step: mean and covariance disagree on batch size or modes");
    }
    if (model.measurement_noise.size() != state.mean.batch()) {
        throw DimensionError("step: measurement noise length does not match the batch size");
    }
    for (double r : model.measurement_noise) {
        if (!(r > 0.0)) throw ParameterError(fmt::format("measurement noise variances must be positive, got {}", r));
    }

    TensorTrain mean_pred = model.transition ? predict_mean(state.mean, *model.transition, policy) : state.mean;
    TTMatrix cov_pred = predict_cov(state.cov, model.transition, model.process_noise, policy);

    std::vector<double> v = innovation(y, mean_pred, c);
    std::vector<double> s = innovation_variance(cov_pred, c, model.measurement_noise);
    TensorTrain gain = kalman_gain(cov_pred, c, s, policy);

    KalmanState next{update_mean(mean_pred, gain, v, policy), update_cov(cov_pred, gain, s, policy), state.t + 1,
                     policy};
    if (info) {
        info->innovation = std::move(v);
        info->innovation_variance = std::move(s);
    }
    return next;
}

}  // namespace tnkf
