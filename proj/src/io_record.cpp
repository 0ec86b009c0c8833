#include "tnkf/io_record.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace tnkf::volterra {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        fields.push_back(field);
    }
    return fields;
}

double parse_double(const std::string& s, Index row) {
    double v = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end) {
        throw std::runtime_error(fmt::format("CSV row {}: cannot parse '{}' as a number", row, s));
    }
    return v;
}

}  // namespace

void write_csv(std::ostream& out, const IoRecord& record) {
    if (record.u.cols() != record.y.cols()) throw std::invalid_argument("write_csv: u and y lengths differ");
    std::string line = "t";
    for (Index i = 1; i <= record.inputs(); ++i) line += fmt::format(",u{}", i);
    for (Index i = 1; i <= record.outputs(); ++i) line += fmt::format(",y{}", i);
    out << line << '\n';
    for (Eigen::Index t = 0; t < record.u.cols(); ++t) {
        line = fmt::format("{}", t);
        for (Eigen::Index i = 0; i < record.u.rows(); ++i) line += fmt::format(",{:.17g}", record.u(i, t));
        for (Eigen::Index i = 0; i < record.y.rows(); ++i) line += fmt::format(",{:.17g}", record.y(i, t));
        out << line << '\n';
    }
    if (!out) throw std::runtime_error("write_csv: write failed");
}

IoRecord read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("CSV: empty input");
    const auto header = split(line);
    if (header.empty() || header[0] != "t") throw std::runtime_error("CSV: header must start with 't'");
    Index p = 0, l = 0;
    for (Index k = 1; k < header.size(); ++k) {
        const auto& h = header[k];
        if (h == fmt::format("u{}", p + 1) && l == 0) ++p;
        else if (h == fmt::format("y{}", l + 1)) ++l;
        else throw std::runtime_error(fmt::format("CSV: unexpected column '{}'", h));
    }
    if (p == 0 || l == 0) throw std::runtime_error("CSV: need at least one input and one output column");

    std::vector<std::vector<double>> rows;
    Index row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto fields = split(line);
        if (fields.size() != header.size()) {
            throw std::runtime_error(fmt::format("CSV row {}: {} fields, expected {}", row, fields.size(), header.size()));
        }
        std::vector<double> values;
        for (Index k = 1; k < fields.size(); ++k) values.push_back(parse_double(fields[k], row));
        rows.push_back(std::move(values));
    }
    const auto count = static_cast<Eigen::Index>(rows.size());
    IoRecord rec{Eigen::MatrixXd(static_cast<Eigen::Index>(p), count), Eigen::MatrixXd(static_cast<Eigen::Index>(l), count),
                 std::nullopt};
    for (Eigen::Index t = 0; t < count; ++t) {
        const auto& r = rows[static_cast<Index>(t)];
        for (Index i = 0; i < p; ++i) rec.u(static_cast<Eigen::Index>(i), t) = r[i];
        for (Index i = 0; i < l; ++i) rec.y(static_cast<Eigen::Index>(i), t) = r[p + i];
    }
    return rec;
}

void save_csv(const std::filesystem::path& path, const IoRecord& record) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
    write_csv(out, record);
}

IoRecord load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
    return read_csv(in);
}

}  // namespace tnkf::volterra
