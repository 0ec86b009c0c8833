#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>

#include "tnkf/tensor_train.hpp"

#include "svd.hpp"

namespace tnkf {

namespace {

// Working copy of a core kept as its left unfolding (left * mode) x right.
// The right unfolding left x (mode * right) is the same column-major buffer.
struct WorkCore {
    Index left;
    Index mode;
    Index right;
    Eigen::MatrixXd unfold;

    Eigen::Map<Eigen::MatrixXd> right_unfolding() {
        return {unfold.data(), static_cast<Eigen::Index>(left), static_cast<Eigen::Index>(mode * right)};
    }
};

std::vector<WorkCore> load(const TensorTrain& tt) {
    std::vector<WorkCore> work;
    work.reserve(tt.order());
    for (const auto& c : tt.cores()) {
        work.push_back({c.dim(0), c.dim(1), c.dim(2), c.as_matrix(c.dim(0) * c.dim(1), c.dim(2))});
    }
    return work;
}

TensorTrain store(const std::vector<WorkCore>& work) {
    std::vector<DenseTensor> cores;
    cores.reserve(work.size());
    for (const auto& w : work) {
        cores.emplace_back(Dims{w.left, w.mode, w.right},
                           std::vector<double>(w.unfold.data(), w.unfold.data() + w.unfold.size()));
    }
    return TensorTrain(std::move(cores));
}

void orthogonalize_right_to_left(std::vector<WorkCore>& work) {
    for (Index k = work.size() - 1; k >= 1; --k) {
        WorkCore& core = work[k];
        // QR of the transposed right unfolding: G^T = Q R  =>  G = R^T Q^T.
        Eigen::MatrixXd gt = core.right_unfolding().transpose();
        const Eigen::Index rows = gt.rows();
        const Eigen::Index m = std::min(rows, gt.cols());
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(gt);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, m);
        Eigen::MatrixXd r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();

        Eigen::MatrixXd qt = q.transpose();  // m x (mode * right)
        core.left = static_cast<Index>(m);
        core.unfold = qt.reshaped(static_cast<Eigen::Index>(core.left * core.mode),
                                  static_cast<Eigen::Index>(core.right));

        WorkCore& prev = work[k - 1];
        prev.unfold = prev.unfold * r.transpose();
        prev.right = static_cast<Index>(m);
    }
}

}  // namespace

Index truncation_rank(const Eigen::VectorXd& sigma, double delta, Index rows, Index cols,
                      const std::optional<Index>& max_rank) {
    const auto count = static_cast<Index>(sigma.size());
    if (count == 0) return 1;
    const double sigma_max = sigma(0);
    if (!(sigma_max > 0.0)) return 1;

    // Numerically zero singular values never count towards the rank.
    const double noise = static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * sigma_max;
    Index rank = 0;
    while (rank < count && sigma(static_cast<Eigen::Index>(rank)) > noise) ++rank;
    rank = std::max<Index>(rank, 1);

    // Drop from the tail while the discarded energy stays within delta^2.
    const double budget = delta * delta;
    double discarded = 0.0;
    while (rank > 1) {
        const double s = sigma(static_cast<Eigen::Index>(rank - 1));
        if (discarded + s * s > budget) break;
        discarded += s * s;
        --rank;
    }
    if (max_rank) rank = std::min(rank, *max_rank);
    return rank;
}

TensorTrain right_orthogonalize(const TensorTrain& tt) {
    auto work = load(tt);
    if (work.size() > 1) orthogonalize_right_to_left(work);
    return store(work);
}

TensorTrain tt_round(const TensorTrain& tt, const RoundingPolicy& policy) {
    policy.validate();
    const Index d = tt.order();
    if (d == 1) return tt;

    auto work = load(tt);
    orthogonalize_right_to_left(work);

    const double norm = work[0].unfold.norm();
    const double delta = policy.tolerance * norm / std::sqrt(static_cast<double>(d - 1));

    for (Index k = 0; k + 1 < d; ++k) {
        WorkCore& core = work[k];
        const Eigen::MatrixXd& a = core.unfold;
        const auto svd = detail::thin_svd(a);
        const Index rank = truncation_rank(svd.s, delta, static_cast<Index>(a.rows()),
                                           static_cast<Index>(a.cols()), policy.max_rank);
        const auto er = static_cast<Eigen::Index>(rank);
        Eigen::MatrixXd carry = svd.s.head(er).asDiagonal() * svd.v.leftCols(er).transpose();
        core.unfold = svd.u.leftCols(er);
        core.right = rank;

        WorkCore& next = work[k + 1];
        Eigen::MatrixXd merged = carry * next.right_unfolding();  // rank x (mode * right)
        next.left = rank;
        next.unfold = merged.reshaped(static_cast<Eigen::Index>(next.left * next.mode),
                                      static_cast<Eigen::Index>(next.right));
    }
    return store(work);
}

TTMatrix tt_round(const TTMatrix& ttm, const RoundingPolicy& policy) {
    return TTMatrix::from_tensor_train(tt_round(ttm.as_tensor_train(), policy), ttm.row_sizes(), ttm.col_sizes());
}

double frobenius_norm(const TensorTrain& tt) {
    auto work = load(tt);
    if (work.size() > 1) orthogonalize_right_to_left(work);
    return work[0].unfold.norm();
}

double frobenius_norm(const TTMatrix& ttm) { return frobenius_norm(ttm.as_tensor_train()); }

}  // namespace tnkf
