#include "tnkf/tt_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include "json.hpp"

namespace tnkf {

namespace {

constexpr std::array<char, 8> kMagic{'T', 'N', 'K', 'F', 'T', 'T', '\x00', '\x01'};

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> bytes{};
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(std::istream& in) {
    std::array<unsigned char, 8> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (!in) throw std::runtime_error("TT container: truncated input");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

void write_container(std::ostream& out, const nlohmann::json& header, const std::vector<DenseTensor>& cores) {
    const std::string text = header.dump();
    out.write(kMagic.data(), kMagic.size());
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& c : cores) {
        for (double x : c.data()) put_u64(out, std::bit_cast<std::uint64_t>(x));
    }
    if (!out) throw std::runtime_error("TT container: write failed");
}

std::vector<double> read_doubles(std::istream& in, std::size_t count) {
    std::vector<double> v(count);
    for (auto& x : v) x = std::bit_cast<double>(get_u64(in));
    return v;
}

nlohmann::json header_for(const char* kind, Index l, const Dims& n, const Dims& ranks, Index payload) {
    return {{"format", "tnkf-tt"}, {"version", kTTFormatVersion}, {"kind", kind}, {"l", l},
            {"n_list", n},         {"ranks", ranks},              {"payload_doubles", payload}};
}

Index payload_size(const std::vector<DenseTensor>& cores) {
    Index total = 0;
    for (const auto& c : cores) total += c.size();
    return total;
}

}  // namespace

void write_tt(std::ostream& out, const TensorTrain& tt) {
    write_container(out, header_for("tt", tt.batch(), tt.mode_sizes(), tt.ranks(), payload_size(tt.cores())),
                    tt.cores());
}

void write_tt(std::ostream& out, const TTMatrix& ttm) {
    auto header = header_for("ttm", ttm.batch(), ttm.row_sizes(), ttm.ranks(), payload_size(ttm.cores()));
    header["n_col_list"] = ttm.col_sizes();
    write_container(out, header, ttm.cores());
}

std::variant<TensorTrain, TTMatrix> read_tt_any(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw std::runtime_error("TT container: bad magic");
    const std::uint64_t len = get_u64(in);
    if (len > (std::uint64_t{1} << 24)) throw std::runtime_error("TT container: header too large");
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("TT container: truncated header");

    const auto header = nlohmann::json::parse(text);
    if (header.at("format") != "tnkf-tt") throw std::runtime_error("TT container: unknown format");
    if (header.at("version").get<int>() != kTTFormatVersion) {
        throw std::runtime_error(fmt::format("TT container: unsupported version {}", header.at("version").dump()));
    }
    const std::string kind = header.at("kind");
    const auto l = header.at("l").get<Index>();
    const auto n = header.at("n_list").get<Dims>();
    const auto ranks = header.at("ranks").get<Dims>();
    if (n.empty() || ranks.size() + 1 != n.size()) throw std::runtime_error("TT container: inconsistent ranks");
    Dims cols = n;
    if (kind == "ttm") cols = header.at("n_col_list").get<Dims>();
    else if (kind != "tt") throw std::runtime_error("TT container: unknown kind " + kind);
    if (cols.size() != n.size()) throw std::runtime_error("TT container: inconsistent column sizes");

    std::vector<DenseTensor> cores;
    Index total = 0;
    for (Index k = 0; k < n.size(); ++k) {
        const Index left = k == 0 ? l : ranks[k - 1];
        const Index right = k + 1 == n.size() ? 1 : ranks[k];
        Dims dims = kind == "tt" ? Dims{left, n[k], right} : Dims{left, n[k], cols[k], right};
        const Index count = element_count(dims);
        total += count;
        cores.emplace_back(std::move(dims), read_doubles(in, count));
    }
    if (header.contains("payload_doubles") && header.at("payload_doubles").get<Index>() != total) {
        throw std::runtime_error("TT container: payload size mismatch");
    }
    if (kind == "tt") return TensorTrain(std::move(cores));
    return TTMatrix(std::move(cores));
}

void save_tt(const std::filesystem::path& path, const TensorTrain& tt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
    write_tt(out, tt);
}

void save_tt(const std::filesystem::path& path, const TTMatrix& ttm) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
    write_tt(out, ttm);
}

TensorTrain load_tt(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
    auto any = read_tt_any(in);
    if (auto* tt = std::get_if<TensorTrain>(&any)) return *tt;
    throw std::runtime_error(fmt::format("{} holds a TT-matrix, expected a TT", path.string()));
}

TTMatrix load_ttm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
    auto any = read_tt_any(in);
    if (auto* ttm = std::get_if<TTMatrix>(&any)) return *ttm;
    throw std::runtime_error(fmt::format("{} holds a TT, expected a TT-matrix", path.string()));
}

}  // namespace tnkf
