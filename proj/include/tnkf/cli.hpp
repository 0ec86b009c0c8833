#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tnkf/tensor_train.hpp"

namespace tnkf::cli {

enum ExitCode : int {
    kSuccess = 0,
    kAcceptanceFailure = 1,
    kUsageError = 2,
};

/// Side-by-side dense and TT Kalman runs on a rank-1 SISO system.
struct CompareConfig {
    Index memory = 4;
    Index degree = 4;
    Index steps = 100;
    std::uint64_t seed = 1;
    double variance = 1000.0;
    double measurement_noise = 1e-2;
    double data_noise = 1e-2;
    RoundingPolicy policy;
    double bound = 1e-8;
};

struct CompareStep {
    Index t = 0;
    double mean_dev = 0.0;  // ||M_tt - M_dense|| / ||M_dense||
    double cov_dev = 0.0;   // same for P
    double rel_err = 0.0;
    double dense_rel_err = 0.0;
};

struct CompareReport {
    std::vector<CompareStep> steps;
    double max_mean_dev = 0.0;
    double max_cov_dev = 0.0;
    double bound = 0.0;

    bool passed() const { return max_mean_dev <= bound && max_cov_dev <= bound; }
};

/// Throws SizeGuardError when (memory + 1)^degree is too large for the dense filter.
CompareReport run_compare(const CompareConfig& config);

struct BenchConfig {
    Index memory = 20;
    std::vector<Index> degrees{2, 3, 4, 5, 6, 7, 8};
    Index steps = 200;
    std::uint64_t seed = 1;
    double variance = 1000.0;
    double measurement_noise = 1e-2;
    RoundingPolicy policy{0.1, 1};
    /// Also time the dense filter (subject to the dense size guard).
    bool dense = false;
};

struct BenchRow {
    Index degree = 0;
    double median_seconds = 0.0;
    double dense_median_seconds = 0.0;  // NaN unless timed
    Index max_mean_rank = 0;
    Index max_cov_rank = 0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least-squares line through (x, y) with its coefficient of determination.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> values);

struct BenchReport {
    std::vector<BenchRow> rows;
    LinearFit fit;  // median_seconds against degree
};

BenchReport run_bench(const BenchConfig& config);

/// Entry point of the `tnkf` tool.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tnkf::cli
