// Acceptance report: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "tnkf/cli.hpp"
#include "tnkf/kalman.hpp"
#include "tnkf/rng.hpp"
#include "tnkf/tensor_ops.hpp"
#include "tnkf/volterra.hpp"

using namespace tnkf;
using namespace tnkf::volterra;

namespace {

struct Line {
    int id = 0;
    bool pass = false;
    std::string text;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double peak_rss_mb() {
    rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    return static_cast<double>(usage.ru_maxrss) / 1024.0;
}

bool all_leq(const Dims& a, const Dims& b) {
    if (a.size() != b.size()) return false;
    for (Index k = 0; k < a.size(); ++k) {
        if (a[k] > b[k]) return false;
    }
    return true;
}

Dims elementwise_max(Dims a, const Dims& b) {
    for (Index k = 0; k < a.size(); ++k) a[k] = std::max(a[k], b[k]);
    return a;
}

Eigen::MatrixXd random_matrix(Rng& rng, Index rows, Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.normal();
    }
    return m;
}

TensorTrain random_tt(Rng& rng, Index l, const Dims& modes, const Dims& ranks) {
    std::vector<DenseTensor> cores;
    for (Index k = 0; k < modes.size(); ++k) {
        const Index left = k == 0 ? l : ranks[k - 1];
        const Index right = k + 1 == modes.size() ? 1 : ranks[k];
        std::vector<double> data(left * modes[k] * right);
        for (double& x : data) x = rng.normal();
        cores.emplace_back(Dims{left, modes[k], right}, std::move(data));
    }
    return TensorTrain(std::move(cores));
}

double rel_diff(const DenseTensor& a, const DenseTensor& b) {
    double num = 0.0, den = 0.0;
    for (Index i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

// Storage of the filter state, in doubles.
Index state_storage(const KalmanState& s) { return s.mean.storage() + s.cov.storage(); }

// ---- 1 ----
Line criterion1() {
    cli::CompareConfig cfg;
    cfg.steps = 200;
    const auto start = std::chrono::steady_clock::now();
    const auto report = cli::run_compare(cfg);
    return {1, report.passed() && report.steps.size() == 200,
            fmt::format("oracle equivalence, 625 states, tau=0, 200 steps: max mean dev {:.3g}, max cov dev {:.3g} "
                        "(bound 1e-8), {:.1f} s",
                        report.max_mean_dev, report.max_cov_dev, seconds_since(start))};
}

// ---- 2, 3 ----
std::pair<Line, Line> criteria2and3() {
    const auto sys = gen_experiment1(1);
    IdentifyOptions opts;
    opts.truth = sys.kernel;
    const auto start = std::chrono::steady_clock::now();
    const auto res = identify({1, 1, 4, 4}, sys.record, {{}, {}, {1e-2}}, RoundingPolicy::exact(),
                              std::vector<double>{1000.0}, opts);
    const double total = seconds_since(start);
    const auto& m = res.metrics;
    const double first = m.front().rel_err;
    const double last = m.back().rel_err;
    std::vector<double> times;
    Dims max_mean(3, 0), max_cov(3, 0);
    for (const auto& s : m) {
        times.push_back(s.step_seconds);
        max_mean = elementwise_max(max_mean, s.mean_ranks);
        max_cov = elementwise_max(max_cov, s.cov_ranks);
    }
    Line two{2, last <= first / 10.0,
             fmt::format("convergence, tau=0, 1000 steps: rel err {:.4g} at step 1, {:.4g} at step 1000 "
                         "(factor {:.3g}, need >= 10)",
                         first, last, first / last)};
    const Dims mean_ranks = m.back().mean_ranks;
    const Dims cov_ranks = m.back().cov_ranks;
    Line three{3, all_leq(mean_ranks, {5, 25, 5}) && all_leq(cov_ranks, {25, 625, 25}),
               fmt::format("ranks at tau=0: mean {} (bound [5, 25, 5], reported in the literature [5, 15, 5]), "
                           "cov {} (bound [25, 625, 25], literature [25, 226, 25]); max over run mean {} cov {}; "
                           "median step {:.3g} s (literature 0.1456 s), total {:.0f} s",
                           mean_ranks, cov_ranks, max_mean, max_cov, cli::median(times), total)};
    return {two, three};
}

// ---- 4 ----
Line criterion4() {
    const auto sys = gen_experiment1(1);
    bool pass = true;
    std::string detail;
    for (double tau : {0.1, 0.5, 0.9}) {
        IdentifyOptions opts;
        opts.truth = sys.kernel;
        const auto res = identify({1, 1, 4, 4}, sys.record, {{}, {}, {1e-2}}, {tau, std::nullopt},
                                  std::vector<double>{1000.0}, opts);
        Index rank_violations = 0;
        Dims max_mean(3, 0), max_cov(3, 0);
        std::vector<double> times;
        for (Index t = 1; t < res.metrics.size(); ++t) {
            const auto& s = res.metrics[t];
            if (*std::max_element(s.mean_ranks.begin(), s.mean_ranks.end()) != 1 ||
                *std::max_element(s.cov_ranks.begin(), s.cov_ranks.end()) != 1) {
                ++rank_violations;
            }
            max_mean = elementwise_max(max_mean, s.mean_ranks);
            max_cov = elementwise_max(max_cov, s.cov_ranks);
            times.push_back(s.step_seconds);
        }
        std::vector<double> windows;
        for (Index w = 0; w < 10; ++w) {
            double sum = 0.0;
            for (Index t = w * 100; t < (w + 1) * 100; ++t) sum += res.metrics[t].rel_err;
            windows.push_back(sum / 100.0);
        }
        Index increases = 0;
        for (Index w = 1; w < windows.size(); ++w) {
            if (windows[w] > windows[w - 1]) ++increases;
        }
        pass = pass && rank_violations == 0 && increases == 0;
        detail += fmt::format("; tau={}: steps with rank > 1: {}/999 (max mean {}, max cov {}), window means {:.3g} "
                              "-> {:.3g} with {} increases, median step {:.3g} s",
                              tau, rank_violations, max_mean, max_cov, windows.front(), windows.back(), increases,
                              cli::median(times));
    }
    return {4, pass, "aggressive rounding, ranks 1 after step 1 and non-increasing 100-step window means" + detail};
}

// ---- 5 ----
struct MixerRun {
    double rmse = 0.0;
    Index max_mean_rank = 0;
    Index max_cov_rank = 0;
    Index storage = 0;
    double median_step = 0.0;
    double total = 0.0;
};

MixerRun run_mixer(double snr, double tau) {
    const auto mix = gen_mixer(7, snr);
    const SystemSize size{2, 1, 10, 7};
    IdentifyOptions opts;
    opts.steps = 5900;
    const auto start = std::chrono::steady_clock::now();
    const auto res = identify(size, mix.record, {{}, {}, {1e-2}}, {tau, std::nullopt}, std::vector<double>{1000.0},
                              opts);
    MixerRun out;
    out.total = seconds_since(start);
    std::vector<double> times;
    for (const auto& s : res.metrics) {
        out.max_mean_rank = std::max(out.max_mean_rank, *std::max_element(s.mean_ranks.begin(), s.mean_ranks.end()));
        out.max_cov_rank = std::max(out.max_cov_rank, *std::max_element(s.cov_ranks.begin(), s.cov_ranks.end()));
        times.push_back(s.step_seconds);
    }
    out.median_step = cli::median(times);
    out.storage = state_storage(res.state);
    const Eigen::MatrixXd sim = simulate_range(res.model, mix.record.u, 5900, 6000);
    out.rmse = rmse(sim, mix.reference.middleCols(5900, 100));
    return out;
}

Line criterion5() {
    const double snrs[] = {12.0, 17.0, 26.0};
    const double target[] = {0.1778, 0.097, 0.034};
    std::vector<MixerRun> runs;
    for (double snr : snrs) runs.push_back(run_mixer(snr, 0.1));
    const double rss = peak_rss_mb();

    const bool memory_ok = rss < 100.0;
    const bool ordered = runs[0].rmse > runs[1].rmse && runs[1].rmse > runs[2].rmse;
    bool band = true;
    bool ranks = true;
    std::string detail;
    for (int k = 0; k < 3; ++k) {
        band = band && runs[k].rmse <= 3.0 * target[k] && runs[k].rmse >= target[k] / 3.0;
        ranks = ranks && runs[k].max_mean_rank <= 20;
        detail += fmt::format("; {} dB: rmse {:.4g} (literature {}), max mean rank {}, max cov rank {}, "
                              "state {} doubles, median step {:.3g} s, total {:.1f} s",
                              snrs[k], runs[k].rmse, target[k], runs[k].max_mean_rank, runs[k].max_cov_rank,
                              runs[k].storage, runs[k].median_step, runs[k].total);
    }

    // Tighter tolerance, reported only.
    std::string extra = "; not asserted, tau=0.01:";
    for (int k = 0; k < 3; ++k) {
        const auto r = run_mixer(snrs[k], 0.01);
        extra += fmt::format(" {} dB rmse {:.4g} max mean rank {};", snrs[k], r.rmse, r.max_mean_rank);
    }
    extra.pop_back();

    return {5, memory_ok && ordered && band && ranks,
            fmt::format("mixer d=7 M=10 p=2 tau=0.1: (a) peak RSS {:.1f} MB < 100 {}, (b) ordering {}, (c) within x3 "
                        "{}, (d) max mean rank <= 20 {}{} (literature: median step 0.0068 s, about 40 s total){}",
                        rss, memory_ok ? "ok" : "FAIL", ordered ? "ok" : "FAIL", band ? "ok" : "FAIL",
                        ranks ? "ok" : "FAIL", detail, extra)};
}

// ---- 6 ----
Line criterion6() {
    Rng rng(2024);
    double worst_ratio[3] = {0.0, 0.0, 0.0};
    double worst_exact = 0.0;
    const double taus[] = {1e-10, 1e-2, 0.5};
    bool pass = true;
    for (int trial = 0; trial < 100; ++trial) {
        const Index d = 1 + rng.next_u64() % 6;
        const Index n = 1 + rng.next_u64() % 6;
        Dims ranks(d - 1);
        for (auto& r : ranks) r = 1 + rng.next_u64() % 8;
        const auto x = random_tt(rng, 1, Dims(d, n), ranks);
        const auto full = contract_full(x);
        const double exact = rel_diff(contract_full(tt_round(x, RoundingPolicy::exact())), full);
        worst_exact = std::max(worst_exact, exact);
        pass = pass && exact <= 1e-12;
        for (int k = 0; k < 3; ++k) {
            const double err = rel_diff(contract_full(tt_round(x, {taus[k], std::nullopt})), full);
            worst_ratio[k] = std::max(worst_ratio[k], err / taus[k]);
            pass = pass && err <= taus[k];
        }
    }
    return {6, pass,
            fmt::format("rounding guarantee on 100 random TTs (d, n <= 6, ranks <= 8): worst err/tau {:.3g} (1e-10), "
                        "{:.3g} (1e-2), {:.3g} (0.5); tau=0 round trip {:.3g} (bound 1e-12)",
                        worst_ratio[0], worst_ratio[1], worst_ratio[2], worst_exact)};
}

// ---- 7 ----
Line criterion7() {
    Rng rng(77);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const Index l = 1 + rng.next_u64() % 4;
        const Index n = 1 + rng.next_u64() % 4;
        const Index d = 1 + rng.next_u64() % 4;
        Dims ranks(d - 1);
        for (auto& r : ranks) r = 1 + rng.next_u64() % 3;
        const auto k = random_tt(rng, l, Dims(d, n), ranks);
        const Eigen::MatrixXd kd = to_dense_matrix(k);
        const auto got = contract_full(kk_outer_tn(k)).permute({1, 2, 0});
        worst = std::max(worst, rel_diff(got, colwise_outer(kd, kd)));
    }
    return {7, worst <= 1e-12,
            fmt::format("kk_outer_tn vs colwise_outer on 50 instances (l, n, d <= 4): worst rel diff {:.3g} "
                        "(bound 1e-12)",
                        worst)};
}

// ---- 8 ----
Line criterion8() {
    cli::BenchConfig cfg;
    const auto report = cli::run_bench(cfg);
    std::vector<std::string> cells;
    for (const auto& r : report.rows) cells.push_back(fmt::format("d={}: {:.2e} s", r.degree, r.median_seconds));
    return {8, report.fit.r_squared >= 0.9,
            fmt::format("linear scaling, M=20, ranks capped at 1, {} steps: R^2 {:.4f} (need >= 0.9), slope {:.3e} "
                        "s per degree; {} (literature: 0.0026 s per step for the capped SISO run)",
                        cfg.steps, report.fit.r_squared, report.fit.slope, fmt::join(cells, ", "))};
}

// ---- 9 ----
Line criterion9() {
    double worst = 0.0;
    bool storage_ok = true;
    Rng rng(9);
    for (Index l : {1, 2, 3}) {
        for (Index n : {2, 3, 5}) {
            for (Index d : {1, 2, 3, 4}) {
                const Dims modes(d, n);
                const auto z = zeros_tt(l, modes);
                worst = std::max(worst, to_dense_matrix(z).cwiseAbs().maxCoeff());
                storage_ok = storage_ok && z.storage() == (l + d - 1) * n;

                std::vector<double> var;
                for (Index i = 0; i < l; ++i) var.push_back(10.0 * static_cast<double>(i + 1));
                const auto p = scaled_identity_ttm(var, modes);
                const auto big_n = static_cast<Eigen::Index>(element_count(modes));
                for (Index i = 0; i < l; ++i) {
                    const Eigen::MatrixXd ref = var[i] * Eigen::MatrixXd::Identity(big_n, big_n);
                    worst = std::max(worst, (to_dense_matrix(p, i) - ref).norm() / ref.norm());
                }
                storage_ok = storage_ok && p.storage() == (l + d - 1) * n * n;

                const Eigen::VectorXd u = random_matrix(rng, n, 1).col(0);
                const auto c = rank1_tt_from_vector(u, d);
                const Eigen::VectorXd ref = repeated_kron(u, d);
                worst = std::max(worst, (to_dense_matrix(c).col(0) - ref).norm() / ref.norm());
                storage_ok = storage_ok && c.storage() == n;
            }
        }
    }
    return {9, worst <= 1e-12 && storage_ok,
            fmt::format("initializers (zeros, sigma^2 I, u^(x)d) for l <= 3, n <= 5, d <= 4: worst rel diff {:.3g} "
                        "(bound 1e-12), storage (l+d-1)n, (l+d-1)n^2, n {}",
                        worst, storage_ok ? "exact" : "MISMATCH")};
}

}  // namespace

int main(int argc, char** argv) {
    // Optional criterion numbers select a subset.
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    const auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
    const auto progress = [](int id) { fmt::print(stderr, "running criterion {}\n", id); };

    std::vector<Line> lines;
    // The mixer runs first so the peak RSS reflects them and not the exact tau=0 runs.
    if (wanted(5)) progress(5), lines.push_back(criterion5());
    if (wanted(1)) progress(1), lines.push_back(criterion1());
    if (wanted(2) || wanted(3)) {
        progress(2);
        auto [two, three] = criteria2and3();
        if (wanted(2)) lines.push_back(two);
        if (wanted(3)) lines.push_back(three);
    }
    if (wanted(4)) progress(4), lines.push_back(criterion4());
    if (wanted(6)) progress(6), lines.push_back(criterion6());
    if (wanted(7)) progress(7), lines.push_back(criterion7());
    if (wanted(8)) progress(8), lines.push_back(criterion8());
    if (wanted(9)) progress(9), lines.push_back(criterion9());
    std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });

    int failed = 0;
    for (const auto& l : lines) {
        fmt::print("{} {}: {}\n", l.pass ? "PASS" : "FAIL", l.id, l.text);
        if (!l.pass) ++failed;
    }
    fmt::print("{}/{} criteria passed\n", lines.size() - failed, lines.size());
    return failed == 0 ? 0 : 1;
}
