#include "tnkf/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "tnkf/dense_kalman.hpp"
#include "tnkf/errors.hpp"
#include "tnkf/io_record.hpp"
#include "tnkf/tensor_ops.hpp"
#include "tnkf/tt_io.hpp"
#include "tnkf/volterra.hpp"

namespace tnkf::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tnkf::volterra;

namespace {

// Flat JSON object -> CLI11 config items for the selected subcommand; arrays become repeated inputs.
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(const CLI::App* root) : root_(root) {}

    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        json j;
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            const std::string name = opt->get_lnames().front();
            if (opt->count() > 0) {
                j[name] = opt->as<std::vector<std::string>>();
            } else if (default_also && !opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            input >> j;
        } catch (const json::exception& e) {
            throw CLI::ConfigError(fmt::format("config file is not valid JSON: {}", e.what()));
        }
        if (!j.is_object()) throw CLI::ConfigError("config file must hold a JSON object");
        std::vector<std::string> parents;
        for (const CLI::App* sub : root_->get_subcommands()) parents.push_back(sub->get_name());
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(key, v));
            } else {
                item.inputs.push_back(scalar(key, value));
            }
            items.push_back(std::move(item));
        }
        return items;
    }

private:
    const CLI::App* root_;

    static std::string scalar(const std::string& key, const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw CLI::ConfigError(fmt::format("config key '{}': expected a string, number or boolean", key));
    }
};

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json ranks_json(const Dims& r) { return json(std::vector<Index>(r.begin(), r.end())); }

void elementwise_max(Dims& acc, const Dims& r) {
    if (acc.size() < r.size()) acc.resize(r.size(), 0);
    for (Index k = 0; k < r.size(); ++k) acc[k] = std::max(acc[k], r[k]);
}

RoundingPolicy make_policy(double tolerance, Index max_rank) {
    RoundingPolicy p{tolerance, std::nullopt};
    if (max_rank > 0) p.max_rank = max_rank;
    p.validate();
    return p;
}

double relative_deviation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref) {
    const double scale = ref.norm();
    const double diff = (a - ref).norm();
    return scale > 0.0 ? diff / scale : diff;
}

std::string fmt_double(double x) { return std::isnan(x) ? std::string("nan") : fmt::format("{:.17g}", x); }

// ---- gen ----

struct GenArgs {
    std::string experiment = "siso4";
    std::uint64_t seed = 1;
    double snr = 12.0;
    std::string out;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
    const fs::path data_path(a.out);
    fs::path sidecar = data_path;
    sidecar.replace_extension(".json");
    json meta{{"generator", a.experiment}, {"seed", a.seed}, {"data", data_path.filename().string()}};

    if (a.experiment == "siso4") {
        const auto sys = gen_experiment1(a.seed);
        fs::path truth = data_path;
        truth.replace_extension(".truth.tt");
        save_csv(data_path, sys.record);
        save_tt(truth, sys.kernel);
        meta["inputs"] = 1;
        meta["outputs"] = 1;
        meta["memory"] = kExperiment1Memory;
        meta["degree"] = kExperiment1Degree;
        meta["samples"] = kExperiment1Samples;
        meta["noise_variance"] = kExperiment1NoiseVariance;
        meta["truth"] = truth.filename().string();
    } else {
        const auto mix = gen_mixer(a.seed, a.snr);
        fs::path ref = data_path;
        ref.replace_extension(".reference.csv");
        save_csv(data_path, mix.record);
        save_csv(ref, IoRecord{mix.record.u, mix.reference, mix.record.sample_rate});
        meta["inputs"] = 2;
        meta["outputs"] = 1;
        meta["samples"] = kMixerSamples;
        meta["sample_rate"] = kMixerSampleRate;
        meta["snr_db"] = std::isfinite(a.snr) ? json(a.snr) : json("inf");
        meta["noise_variance"] = mix.noise_variance;
        meta["lo_hz"] = kMixerLoHz;
        meta["if_hz"] = kMixerIfHz;
        meta["reference"] = ref.filename().string();
    }
    std::ofstream side(sidecar);
    side << meta.dump(2) << '\n';
    if (!side) throw std::runtime_error(fmt::format("cannot write {}", sidecar.string()));
    out << meta.dump() << '\n';
    return kSuccess;
}

// ---- identify ----

struct IdentifyArgs {
    std::string data;
    Index memory = 0;
    Index degree = 0;
    std::vector<double> variance{1000.0};
    std::vector<double> noise{1e-2};
    double process_noise = 0.0;
    double tolerance = 0.0;
    Index max_rank = 0;
    Index steps = 0;
    Index holdout = 0;
    std::string reference;
    std::string truth;
    std::string metrics;
    std::string model;
    bool deterministic = false;
};

std::vector<double> per_output(const std::vector<double>& values, Index l, const char* what) {
    if (values.size() == l) return values;
    if (values.size() == 1) return std::vector<double>(l, values[0]);
    throw ParameterError(fmt::format("--{} needs 1 or {} values, got {}", what, l, values.size()));
}

void write_metrics_header(std::ostream& os, Index l, Index d) {
    os << "t,rel_err";
    if (l == 1) {
        os << ",innovation,s";
    } else {
        for (Index i = 1; i <= l; ++i) os << ",innovation_" << i;
        for (Index i = 1; i <= l; ++i) os << ",s_" << i;
    }
    for (Index k = 1; k < d; ++k) os << ",rank_mean_" << k;
    for (Index k = 1; k < d; ++k) os << ",rank_cov_" << k;
    os << ",step_seconds\n";
}

void write_metrics_row(std::ostream& os, const StepMetrics& m, bool deterministic) {
    os << (m.t + 1) << ',' << fmt_double(m.rel_err);
    for (double v : m.innovation) os << ',' << fmt_double(v);
    for (double s : m.innovation_variance) os << ',' << fmt_double(s);
    for (Index r : m.mean_ranks) os << ',' << r;
    for (Index r : m.cov_ranks) os << ',' << r;
    os << ',' << fmt_double(deterministic ? 0.0 : m.step_seconds) << '\n';
}

int cmd_identify(const IdentifyArgs& a, std::ostream& out) {
    const IoRecord data = load_csv(a.data);
    const SystemSize size{data.inputs(), data.outputs(), a.memory, a.degree};
    size.validate();
    const Index l = size.outputs;
    if (a.holdout >= data.samples()) throw ParameterError("--holdout must be smaller than the record length");
    const Index available = data.samples() - a.holdout;
    const Index steps = a.steps > 0 ? a.steps : available;
    if (steps > available) {
        throw ParameterError(fmt::format("--steps {} exceeds the {} samples before the holdout", steps, available));
    }

    ModelSpec model;
    model.measurement_noise = per_output(a.noise, l, "noise");
    if (a.process_noise < 0.0) throw ParameterError("--process-noise must be >= 0");
    if (a.process_noise > 0.0) {
        model.process_noise = scaled_identity_ttm(std::vector<double>(l, a.process_noise), size.modes());
    }
    const auto variances = per_output(a.variance, l, "variance");
    const RoundingPolicy policy = make_policy(a.tolerance, a.max_rank);

    IdentifyOptions opts;
    opts.steps = steps;
    if (!a.truth.empty()) opts.truth = load_tt(a.truth);

    std::ofstream metrics_file;
    if (!a.metrics.empty()) {
        metrics_file.open(a.metrics);
        if (!metrics_file) throw std::runtime_error(fmt::format("cannot open {} for writing", a.metrics));
        write_metrics_header(metrics_file, l, size.degree);
    }
    Dims max_mean, max_cov;
    std::vector<double> times;
    times.reserve(steps);
    opts.on_step = [&](const StepMetrics& m, const KalmanState&) {
        if (metrics_file.is_open()) write_metrics_row(metrics_file, m, a.deterministic);
        elementwise_max(max_mean, m.mean_ranks);
        elementwise_max(max_cov, m.cov_ranks);
        times.push_back(m.step_seconds);
    };
    const auto result = identify(size, data, model, policy, variances, opts);
    if (metrics_file.is_open()) {
        metrics_file.close();
        if (!metrics_file) throw std::runtime_error(fmt::format("write to {} failed", a.metrics));
    }
    if (!a.model.empty()) save_tt(a.model, result.model.kernel);

    json summary{{"steps", steps},
                 {"samples", data.samples()},
                 {"tolerance", a.tolerance},
                 {"final_rel_err", result.metrics.empty() ? json(nullptr) : number_or_null(result.metrics.back().rel_err)},
                 {"median_step_seconds", median(times)},
                 {"total_seconds", std::accumulate(times.begin(), times.end(), 0.0)},
                 {"max_mean_ranks", ranks_json(max_mean)},
                 {"max_cov_ranks", ranks_json(max_cov)},
                 {"max_mean_rank", max_mean.empty() ? Index{1} : *std::max_element(max_mean.begin(), max_mean.end())},
                 {"final_mean_ranks", ranks_json(result.state.mean.ranks())},
                 {"final_cov_ranks", ranks_json(result.state.cov.ranks())},
                 {"holdout_rmse", nullptr}};

    if (a.holdout > 0) {
        Eigen::MatrixXd truth_y = data.y;
        if (!a.reference.empty()) {
            const IoRecord ref = load_csv(a.reference);
            if (ref.samples() != data.samples() || ref.outputs() != l) {
                throw DimensionError("--reference must match the data record in length and output count");
            }
            truth_y = ref.y;
        }
        const Index begin = data.samples() - a.holdout;
        const Eigen::MatrixXd sim = simulate_range(result.model, data.u, begin, data.samples());
        summary["holdout_rmse"] = rmse(sim, truth_y.middleCols(static_cast<Eigen::Index>(begin),
                                                               static_cast<Eigen::Index>(a.holdout)));
        summary["holdout_samples"] = a.holdout;
    }
    if (!a.model.empty()) summary["model"] = a.model;
    if (!a.metrics.empty()) summary["metrics"] = a.metrics;
    out << summary.dump() << '\n';
    return kSuccess;
}

// ---- compare ----

struct CompareArgs {
    CompareConfig config;
    double tolerance = 0.0;
    Index max_rank = 0;
    std::string report;
};

int cmd_compare(CompareArgs a, std::ostream& out) {
    a.config.policy = make_policy(a.tolerance, a.max_rank);
    const auto report = run_compare(a.config);
    if (!a.report.empty()) {
        std::ofstream os(a.report);
        if (!os) throw std::runtime_error(fmt::format("cannot open {} for writing", a.report));
        os << "t,mean_dev,cov_dev,rel_err,dense_rel_err\n";
        for (const auto& s : report.steps) {
            os << (s.t + 1) << ',' << fmt_double(s.mean_dev) << ',' << fmt_double(s.cov_dev) << ','
               << fmt_double(s.rel_err) << ',' << fmt_double(s.dense_rel_err) << '\n';
        }
    }
    json summary{{"steps", report.steps.size()},
                 {"state_size", element_count(Dims(a.config.degree, a.config.memory + 1))},
                 {"tolerance", a.config.policy.tolerance},
                 {"max_mean_dev", report.max_mean_dev},
                 {"max_cov_dev", report.max_cov_dev},
                 {"bound", report.bound},
                 {"passed", report.passed()}};
    for (const auto& s : report.steps) {
        if (s.mean_dev > report.bound || s.cov_dev > report.bound) {
            summary["first_violation_step"] = s.t + 1;
            break;
        }
    }
    out << summary.dump() << '\n';
    return report.passed() ? kSuccess : kAcceptanceFailure;
}

// ---- bench ----

struct BenchArgs {
    BenchConfig config;
    double tolerance = 0.1;
    Index max_rank = 1;
    std::string out;
    double min_r2 = -1.0;
};

int cmd_bench(BenchArgs a, std::ostream& out) {
    a.config.policy = make_policy(a.tolerance, a.max_rank);
    const auto report = run_bench(a.config);
    if (!a.out.empty()) {
        std::ofstream os(a.out);
        if (!os) throw std::runtime_error(fmt::format("cannot open {} for writing", a.out));
        os << "degree,median_step_seconds,dense_median_step_seconds,max_mean_rank,max_cov_rank\n";
        for (const auto& r : report.rows) {
            os << r.degree << ',' << fmt_double(r.median_seconds) << ',' << fmt_double(r.dense_median_seconds) << ','
               << r.max_mean_rank << ',' << r.max_cov_rank << '\n';
        }
    }
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"degree", r.degree},
                        {"median_step_seconds", r.median_seconds},
                        {"dense_median_step_seconds", number_or_null(r.dense_median_seconds)},
                        {"max_mean_rank", r.max_mean_rank},
                        {"max_cov_rank", r.max_cov_rank}});
    }
    json summary{{"rows", rows},
                 {"slope", report.fit.slope},
                 {"intercept", report.fit.intercept},
                 {"r_squared", report.fit.r_squared}};
    const bool ok = report.fit.r_squared >= a.min_r2;
    if (a.min_r2 >= 0.0) {
        summary["min_r_squared"] = a.min_r2;
        summary["passed"] = ok;
    }
    out << summary.dump() << '\n';
    return ok ? kSuccess : kAcceptanceFailure;
}

}  // namespace

double median(std::vector<double> values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (values.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(values.begin(), mid);
    return 0.5 * (lo + hi);
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ParameterError("linear_fit: need at least two (x, y) pairs");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw ParameterError("linear_fit: x values are all equal");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

CompareReport run_compare(const CompareConfig& config) {
    const SystemSize size{1, 1, config.memory, config.degree};
    size.validate();
    const Index state_size = element_count(size.modes());
    const std::vector<double> variances{config.variance};
    const std::vector<double> noise{config.measurement_noise};
    // Checks the guard before any filtering starts.
    DenseKalmanState dense = dense_initial_state(variances, state_size);

    const auto sys = gen_rank1_system(config.memory, config.degree, std::max(config.steps, config.memory + 1),
                                      config.data_noise, config.seed);
    const Eigen::VectorXd truth = repeated_kron(sys.factor, config.degree);

    ModelSpec model;
    model.measurement_noise = noise;
    IdentifyOptions opts;
    opts.steps = config.steps;
    opts.truth = sys.kernel;

    CompareReport report;
    report.bound = config.bound;
    report.steps.reserve(config.steps);
    opts.on_step = [&](const StepMetrics& m, const KalmanState& state) {
        const Eigen::VectorXd c = repeated_kron(build_ut(sys.record.u, m.t, config.memory), config.degree);
        const double y = sys.record.y(0, static_cast<Eigen::Index>(m.t));
        dense = dense_kalman_step(dense, std::nullopt, c, {}, noise, std::span<const double>(&y, 1));

        CompareStep s;
        s.t = m.t;
        s.mean_dev = relative_deviation(to_dense_matrix(state.mean), dense.mean);
        s.cov_dev = relative_deviation(to_dense_matrix(state.cov, 0), dense.cov[0]);
        s.rel_err = m.rel_err;
        s.dense_rel_err = (dense.mean.col(0) - truth).norm() / truth.norm();
        report.max_mean_dev = std::max(report.max_mean_dev, s.mean_dev);
        report.max_cov_dev = std::max(report.max_cov_dev, s.cov_dev);
        report.steps.push_back(s);
    };
    identify(size, sys.record, model, config.policy, variances, opts);
    return report;
}

BenchReport run_bench(const BenchConfig& config) {
    if (config.degrees.size() < 2) throw ParameterError("bench: need at least two degrees");
    if (config.steps < 1) throw ParameterError("bench: steps must be >= 1");
    BenchReport report;
    std::vector<double> xs, ys;
    for (Index d : config.degrees) {
        const SystemSize size{1, 1, config.memory, d};
        size.validate();
        const std::vector<double> variances{config.variance};
        const std::vector<double> noise{config.measurement_noise};

        std::optional<DenseKalmanState> dense;
        if (config.dense) {
            try {
                dense = dense_initial_state(variances, element_count(size.modes()));
            } catch (const SizeGuardError& e) {
                throw SizeGuardError(fmt::format("bench: dense filter refused degree {}: {}", d, e.what()));
            }
        }

        const auto sys = gen_rank1_system(config.memory, d, std::max(config.steps, config.memory + 1), 1e-2,
                                          config.seed);
        ModelSpec model;
        model.measurement_noise = noise;
        IdentifyOptions opts;
        opts.steps = config.steps;
        BenchRow row;
        row.degree = d;
        std::vector<double> times;
        opts.on_step = [&](const StepMetrics& m, const KalmanState&) {
            times.push_back(m.step_seconds);
            for (Index r : m.mean_ranks) row.max_mean_rank = std::max(row.max_mean_rank, r);
            for (Index r : m.cov_ranks) row.max_cov_rank = std::max(row.max_cov_rank, r);
        };
        identify(size, sys.record, model, config.policy, variances, opts);
        row.median_seconds = median(times);
        row.dense_median_seconds = std::numeric_limits<double>::quiet_NaN();

        if (dense) {
            std::vector<double> dense_times;
            for (Index t = 0; t < config.steps; ++t) {
                const double y = sys.record.y(0, static_cast<Eigen::Index>(t));
                const auto start = std::chrono::steady_clock::now();
                const Eigen::VectorXd c = repeated_kron(build_ut(sys.record.u, t, config.memory), d);
                *dense = dense_kalman_step(*dense, std::nullopt, c, {}, noise, std::span<const double>(&y, 1));
                dense_times.push_back(
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            }
            row.dense_median_seconds = median(dense_times);
        }
        xs.push_back(static_cast<double>(d));
        ys.push_back(row.median_seconds);
        report.rows.push_back(row);
    }
    report.fit = linear_fit(xs, ys);
    return report;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tensor-train Kalman filter for MIMO Volterra identification", "tnkf"};
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<JsonConfig>(&app));
    app.set_config("--config", "", "JSON file with option defaults for the subcommand");
    app.fallthrough();
    app.allow_config_extras(CLI::config_extras_mode::error);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a synthetic input/output record");
    g->add_option("--experiment", gen.experiment, "siso4 or mixer")
        ->check(CLI::IsMember({"siso4", "mixer"}))
        ->capture_default_str();
    g->add_option("--seed", gen.seed, "PRNG seed")->capture_default_str();
    g->add_option("--snr", gen.snr, "Mixer SNR in dB (inf for no noise)")->capture_default_str();
    g->add_option("--out", gen.out, "Output CSV path")->required();

    IdentifyArgs id;
    auto* i = app.add_subcommand("identify", "Identify a Volterra kernel with the TT Kalman filter");
    i->add_option("--data", id.data, "Input/output CSV")->required()->check(CLI::ExistingFile);
    i->add_option("--memory", id.memory, "Memory length M")->required()->check(CLI::PositiveNumber);
    i->add_option("--degree", id.degree, "Degree d")->required()->check(CLI::PositiveNumber);
    i->add_option("--variance", id.variance, "Initial coefficient variance (one, or one per output)")
        ->capture_default_str();
    i->add_option("--noise", id.noise, "Measurement noise variance R (one, or one per output)")
        ->capture_default_str();
    i->add_option("--process-noise", id.process_noise, "Process noise variance q (Q = q I)")->capture_default_str();
    i->add_option("--tolerance", id.tolerance, "Relative rounding tolerance")->capture_default_str();
    i->add_option("--max-rank", id.max_rank, "Rank cap (0 for none)")->capture_default_str();
    i->add_option("--steps", id.steps, "Samples to filter (default: all before the holdout)");
    i->add_option("--holdout", id.holdout, "Trailing samples held out and simulated")->capture_default_str();
    i->add_option("--reference", id.reference, "CSV with noise-free outputs for the holdout RMSE")
        ->check(CLI::ExistingFile);
    i->add_option("--truth", id.truth, "True kernel (TT file) for the relative error")->check(CLI::ExistingFile);
    i->add_option("--metrics", id.metrics, "Per-step metrics CSV");
    i->add_option("--model", id.model, "Write the identified kernel (TT file)");
    i->add_flag("--deterministic", id.deterministic, "Write 0 in the step_seconds column");

    CompareArgs cmp;
    auto* c = app.add_subcommand("compare", "Run the dense and TT filters side by side");
    c->add_option("--memory", cmp.config.memory, "Memory length M")->check(CLI::PositiveNumber)->capture_default_str();
    c->add_option("--degree", cmp.config.degree, "Degree d")->check(CLI::PositiveNumber)->capture_default_str();
    c->add_option("--steps", cmp.config.steps, "Filter steps")->check(CLI::PositiveNumber)->capture_default_str();
    c->add_option("--seed", cmp.config.seed, "PRNG seed")->capture_default_str();
    c->add_option("--variance", cmp.config.variance, "Initial coefficient variance")->capture_default_str();
    c->add_option("--noise", cmp.config.measurement_noise, "Measurement noise variance R")->capture_default_str();
    c->add_option("--data-noise", cmp.config.data_noise, "Noise variance of the generated data")
        ->capture_default_str();
    c->add_option("--tolerance", cmp.tolerance, "Relative rounding tolerance")->capture_default_str();
    c->add_option("--max-rank", cmp.max_rank, "Rank cap (0 for none)")->capture_default_str();
    c->add_option("--bound", cmp.config.bound, "Largest accepted relative deviation")->capture_default_str();
    c->add_option("--report", cmp.report, "Per-step deviation CSV");

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Median step time against the degree");
    b->add_option("--memory", bench.config.memory, "Memory length M")->check(CLI::PositiveNumber)->capture_default_str();
    b->add_option("--degrees", bench.config.degrees, "Degrees to sweep")->capture_default_str();
    b->add_option("--steps", bench.config.steps, "Steps per degree")->check(CLI::PositiveNumber)->capture_default_str();
    b->add_option("--seed", bench.config.seed, "PRNG seed")->capture_default_str();
    b->add_option("--tolerance", bench.tolerance, "Relative rounding tolerance")->capture_default_str();
    b->add_option("--max-rank", bench.max_rank, "Rank cap (0 for none)")->capture_default_str();
    b->add_flag("--dense", bench.config.dense, "Also time the dense filter");
    b->add_option("--out", bench.out, "Timing table CSV");
    b->add_option("--min-r2", bench.min_r2, "Exit 1 when the linear fit R^2 is below this");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    try {
        if (g->parsed()) return cmd_gen(gen, out);
        if (i->parsed()) return cmd_identify(id, out);
        if (c->parsed()) return cmd_compare(cmp, out);
        if (b->parsed()) return cmd_bench(bench, out);
    } catch (const std::exception& e) {
        fmt::print(err, "tnkf: error: {}\n", e.what());
        return kUsageError;
    }
    return kUsageError;
}

}  // namespace tnkf::cli
