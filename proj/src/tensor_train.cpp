#include "tnkf/tensor_train.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "tnkf/errors.hpp"
#include "svd.hpp"

namespace tnkf {

void RoundingPolicy::validate() const {
    if (!(tolerance >= 0.0) || !std::isfinite(tolerance)) {
        throw ParameterError(fmt::format("rounding tolerance must be finite and >= 0, got {}", tolerance));
    }
    if (max_rank && *max_rank < 1) {
        throw ParameterError("rounding max_rank must be at least 1");
    }
}

namespace {

void validate_chain(const std::vector<DenseTensor>& cores, Index core_order, const char* what) {
    if (cores.empty()) {
        throw DimensionError(fmt::format("{} needs at least one core", what));
    }
    for (Index k = 0; k < cores.size(); ++k) {
        if (cores[k].order() != core_order) {
            throw DimensionError(fmt::format("{}: core {} has order {}, expected {}", what, k + 1,
                                             cores[k].order(), core_order));
        }
        if (k + 1 < cores.size() && cores[k].dim(core_order - 1) != cores[k + 1].dim(0)) {
            throw DimensionError(fmt::format("{}: rank mismatch between cores {} and {} ({} vs {})", what, k + 1,
                                             k + 2, cores[k].dim(core_order - 1), cores[k + 1].dim(0)));
        }
    }
    if (cores.back().dim(core_order - 1) != 1) {
        throw DimensionError(fmt::format("{}: last rank must be 1, got {}", what, cores.back().dim(core_order - 1)));
    }
}

Index unique_storage(const std::vector<DenseTensor>& cores) {
    std::set<const void*> seen;
    Index total = 0;
    for (const auto& c : cores) {
        if (seen.insert(c.storage_id()).second) total += c.size();
    }
    return total;
}

}  // namespace

TensorTrain::TensorTrain(std::vector<DenseTensor> cores) : cores_(std::move(cores)) {
    validate_chain(cores_, 3, "TensorTrain");
}

Dims TensorTrain::mode_sizes() const {
    Dims n;
    for (const auto& c : cores_) n.push_back(c.dim(1));
    return n;
}

Dims TensorTrain::ranks() const {
    Dims r;
    for (Index k = 0; k + 1 < cores_.size(); ++k) r.push_back(cores_[k].dim(2));
    return r;
}

Index TensorTrain::max_rank() const {
    const Dims r = ranks();
    return r.empty() ? 1 : *std::max_element(r.begin(), r.end());
}

Index TensorTrain::storage() const { return unique_storage(cores_); }

TTMatrix::TTMatrix(std::vector<DenseTensor> cores) : cores_(std::move(cores)) {
    validate_chain(cores_, 4, "TTMatrix");
}

Dims TTMatrix::row_sizes() const {
    Dims n;
    for (const auto& c : cores_) n.push_back(c.dim(1));
    return n;
}

Dims TTMatrix::col_sizes() const {
    Dims n;
    for (const auto& c : cores_) n.push_back(c.dim(2));
    return n;
}

Dims TTMatrix::ranks() const {
    Dims r;
    for (Index k = 0; k + 1 < cores_.size(); ++k) r.push_back(cores_[k].dim(3));
    return r;
}

Index TTMatrix::max_rank() const {
    const Dims r = ranks();
    return r.empty() ? 1 : *std::max_element(r.begin(), r.end());
}

Index TTMatrix::storage() const { return unique_storage(cores_); }

TensorTrain TTMatrix::as_tensor_train() const {
    std::vector<DenseTensor> cores;
    cores.reserve(cores_.size());
    for (const auto& c : cores_) {
        cores.push_back(c.reshape({c.dim(0), c.dim(1) * c.dim(2), c.dim(3)}));
    }
    return TensorTrain(std::move(cores));
}

TTMatrix TTMatrix::from_tensor_train(const TensorTrain& tt, const Dims& rows, const Dims& cols) {
    if (rows.size() != tt.order() || cols.size() != tt.order()) {
        throw DimensionError("from_tensor_train: row/col size lists must have one entry per core");
    }
    std::vector<DenseTensor> cores;
    cores.reserve(tt.order());
    for (Index k = 0; k < tt.order(); ++k) {
        const auto& c = tt.core(k);
        if (c.dim(1) != rows[k] * cols[k]) {
            throw DimensionError(fmt::format("from_tensor_train: core {} mode {} != {}x{}", k + 1, c.dim(1),
                                             rows[k], cols[k]));
        }
        cores.push_back(c.reshape({c.dim(0), rows[k], cols[k], c.dim(2)}));
    }
    return TTMatrix(std::move(cores));
}

DenseTensor contract_full(const TensorTrain& tt) {
    Dims out_dims{tt.batch()};
    for (Index n : tt.mode_sizes()) out_dims.push_back(n);
    checked_element_count(out_dims, "contract_full");

    const auto& first = tt.core(0);
    Eigen::MatrixXd w = first.as_matrix(first.dim(0) * first.dim(1), first.dim(2));
    for (Index k = 1; k < tt.order(); ++k) {
        const auto& c = tt.core(k);
        Eigen::MatrixXd next = w * c.as_matrix(c.dim(0), c.dim(1) * c.dim(2));
        // (L x n r') in column-major order is (L n) x r'.
        w = next.reshaped(next.rows() * static_cast<Eigen::Index>(c.dim(1)), static_cast<Eigen::Index>(c.dim(2)));
    }
    return DenseTensor(std::move(out_dims), std::vector<double>(w.data(), w.data() + w.size()));
}

DenseTensor contract_full(const TTMatrix& ttm) {
    const Index d = ttm.order();
    const Dims rows = ttm.row_sizes();
    const Dims cols = ttm.col_sizes();
    const Index nr = element_count(rows);
    const Index nc = element_count(cols);
    checked_element_count(Dims{ttm.batch(), nr, nc}, "contract_full");

    DenseTensor merged = contract_full(ttm.as_tensor_train());
    Dims split{ttm.batch()};
    for (Index k = 0; k < d; ++k) {
        split.push_back(rows[k]);
        split.push_back(cols[k]);
    }
    // (l, r1, c1, ..., rd, cd) -> (l, r1..rd, c1..cd)
    Dims perm{0};
    for (Index k = 0; k < d; ++k) perm.push_back(1 + 2 * k);
    for (Index k = 0; k < d; ++k) perm.push_back(2 + 2 * k);
    return merged.reshape(split).permute(perm).reshape({ttm.batch(), nr, nc});
}

Eigen::MatrixXd to_dense_matrix(const TensorTrain& tt) {
    const DenseTensor full = contract_full(tt);
    const Index l = tt.batch();
    return full.as_matrix(l, full.size() / l).transpose();
}

Eigen::MatrixXd to_dense_matrix(const TTMatrix& ttm, Index batch_index) {
    if (batch_index >= ttm.batch()) {
        throw BoundsError(fmt::format("batch index {} out of range for batch {}", batch_index, ttm.batch()));
    }
    const DenseTensor full = contract_full(ttm);
    const Index l = full.dim(0);
    const Index nr = full.dim(1);
    const Index nc = full.dim(2);
    Eigen::MatrixXd out(nr, nc);
    auto data = full.data();
    for (Index j = 0; j < nc; ++j) {
        for (Index i = 0; i < nr; ++i) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[batch_index + l * (i + nr * j)];
        }
    }
    return out;
}

TensorTrain tt_from_dense(const DenseTensor& x, const RoundingPolicy& policy) {
    Dims dims{1};
    dims.insert(dims.end(), x.dims().begin(), x.dims().end());
    return tt_from_dense_batched(x.reshape(std::move(dims)), policy);
}

TensorTrain tt_from_dense_batched(const DenseTensor& x, const RoundingPolicy& policy) {
    policy.validate();
    if (x.order() < 2) {
        throw DimensionError("tt_from_dense_batched needs dims (l, n_1, ..., n_d) with d >= 1");
    }
    const Index d = x.order() - 1;
    const Index l = x.dim(0);
    std::vector<DenseTensor> cores;
    if (d == 1) {
        cores.push_back(x.reshape({l, x.dim(1), 1}));
        return TensorTrain(std::move(cores));
    }

    const double delta = policy.tolerance * x.frobenius_norm() / std::sqrt(static_cast<double>(d - 1));
    Index left = l;
    Index rest = x.size() / l;
    Eigen::MatrixXd carry = x.as_matrix(l, rest);
    for (Index k = 0; k + 1 < d; ++k) {
        const Index n = x.dim(k + 1);
        rest /= n;
        Eigen::MatrixXd unfold = carry.reshaped(static_cast<Eigen::Index>(left * n), static_cast<Eigen::Index>(rest));
        const auto svd = detail::thin_svd(unfold);
        const Index rank = truncation_rank(svd.s, delta, left * n, rest, policy.max_rank);
        const auto er = static_cast<Eigen::Index>(rank);
        Eigen::MatrixXd u = svd.u.leftCols(er);
        cores.emplace_back(Dims{left, n, rank}, std::vector<double>(u.data(), u.data() + u.size()));
        carry = svd.s.head(er).asDiagonal() * svd.v.leftCols(er).transpose();
        left = rank;
    }
    cores.emplace_back(Dims{left, x.dim(d), 1}, std::vector<double>(carry.data(), carry.data() + carry.size()));
    return TensorTrain(std::move(cores));
}

namespace {

void check_same_shape(const TensorTrain& a, const TensorTrain& b, const char* what) {
    if (a.order() != b.order() || a.mode_sizes() != b.mode_sizes()) {
        throw DimensionError(fmt::format("{}: mode sizes differ ({} vs {})", what, fmt::join(a.mode_sizes(), "x"),
                                         fmt::join(b.mode_sizes(), "x")));
    }
    if (a.batch() != b.batch()) {
        throw DimensionError(fmt::format("{}: batch sizes differ ({} vs {})", what, a.batch(), b.batch()));
    }
}

}  // namespace

TensorTrain tt_add(const TensorTrain& a, const TensorTrain& b) {
    check_same_shape(a, b, "tt_add");
    const Index d = a.order();
    std::vector<DenseTensor> cores;
    cores.reserve(d);

    if (d == 1) {
        auto x = a.core(0).data();
        auto y = b.core(0).data();
        std::vector<double> out(x.size());
        for (Index i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
        cores.emplace_back(a.core(0).dims(), std::move(out));
        return TensorTrain(std::move(cores));
    }

    for (Index k = 0; k < d; ++k) {
        const auto& ca = a.core(k);
        const auto& cb = b.core(k);
        const Index n = ca.dim(1);
        const bool first = k == 0;
        const bool last = k + 1 == d;
        const Index la = ca.dim(0), lb = cb.dim(0);
        const Index ra = ca.dim(2), rb = cb.dim(2);
        const Index left = first ? la : la + lb;
        const Index right = last ? 1 : ra + rb;
        std::vector<double> out(left * n * right, 0.0);
        auto at = [&](Index p, Index i, Index q) -> double& { return out[p + left * (i + n * q)]; };
        auto xa = ca.data();
        auto xb = cb.data();
        // Block layout: a occupies the leading rank block, b the trailing one.
        // The first core shares its batch rows; the last core shares its unit column.
        const Index b_row = first ? 0 : la;
        const Index b_col = last ? 0 : ra;
        for (Index q = 0; q < ra; ++q)
            for (Index i = 0; i < n; ++i)
                for (Index p = 0; p < la; ++p) at(p, i, q) = xa[p + la * (i + n * q)];
        for (Index q = 0; q < rb; ++q)
            for (Index i = 0; i < n; ++i)
                for (Index p = 0; p < lb; ++p) at(b_row + p, i, b_col + q) = xb[p + lb * (i + n * q)];
        cores.emplace_back(Dims{left, n, right}, std::move(out));
    }
    return TensorTrain(std::move(cores));
}

TTMatrix tt_add(const TTMatrix& a, const TTMatrix& b) {
    if (a.row_sizes() != b.row_sizes() || a.col_sizes() != b.col_sizes()) {
        throw DimensionError("tt_add: TT-matrix row/column sizes differ");
    }
    return TTMatrix::from_tensor_train(tt_add(a.as_tensor_train(), b.as_tensor_train()), a.row_sizes(),
                                       a.col_sizes());
}

TensorTrain scale_batch(const TensorTrain& tt, std::span<const double> weights) {
    const Index l = tt.batch();
    if (weights.size() != l) {
        throw DimensionError(fmt::format("scale_batch: {} weights for batch size {}", weights.size(), l));
    }
    const auto& first = tt.core(0);
    auto in = first.data();
    std::vector<double> out(in.begin(), in.end());
    for (Index j = 0; j < out.size(); ++j) out[j] *= weights[j % l];
    std::vector<DenseTensor> cores = tt.cores();
    cores[0] = DenseTensor(first.dims(), std::move(out));
    return TensorTrain(std::move(cores));
}

TTMatrix scale_batch(const TTMatrix& ttm, std::span<const double> weights) {
    return TTMatrix::from_tensor_train(scale_batch(ttm.as_tensor_train(), weights), ttm.row_sizes(),
                                       ttm.col_sizes());
}

TensorTrain scale(const TensorTrain& tt, double factor) {
    std::vector<double> w(tt.batch(), factor);
    return scale_batch(tt, w);
}

TensorTrain zeros_tt(Index l, const Dims& modes) {
    if (l < 1 || modes.empty()) {
        throw DimensionError("zeros_tt needs l >= 1 and at least one mode");
    }
    std::vector<DenseTensor> cores;
    cores.emplace_back(Dims{l, modes[0], 1});
    for (Index k = 1; k < modes.size(); ++k) cores.emplace_back(Dims{1, modes[k], 1});
    return TensorTrain(std::move(cores));
}

TTMatrix scaled_identity_ttm(std::span<const double> variances, const Dims& modes) {
    if (variances.empty() || modes.empty()) {
        throw DimensionError("scaled_identity_ttm needs at least one variance and one mode");
    }
    for (double v : variances) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ParameterError(fmt::format("scaled_identity_ttm: variances must be positive, got {}", v));
        }
    }
    const Index l = variances.size();
    std::vector<DenseTensor> cores;
    {
        const Index n = modes[0];
        std::vector<double> data(l * n * n, 0.0);
        for (Index i = 0; i < l; ++i)
            for (Index a = 0; a < n; ++a) data[i + l * (a + n * a)] = variances[i];
        cores.emplace_back(Dims{l, n, n, 1}, std::move(data));
    }
    for (Index k = 1; k < modes.size(); ++k) {
        const Index n = modes[k];
        std::vector<double> data(n * n, 0.0);
        for (Index a = 0; a < n; ++a) data[a + n * a] = 1.0;
        cores.emplace_back(Dims{1, n, n, 1}, std::move(data));
    }
    return TTMatrix(std::move(cores));
}

TensorTrain rank1_tt_from_vector(const Eigen::VectorXd& u, Index d) {
    if (d < 1 || u.size() == 0) {
        throw DimensionError("rank1_tt_from_vector needs d >= 1 and a nonempty vector");
    }
    const auto n = static_cast<Index>(u.size());
    DenseTensor shared({1, n, 1}, std::vector<double>(u.data(), u.data() + u.size()));
    return TensorTrain(std::vector<DenseTensor>(d, shared));
}

}  // namespace tnkf
