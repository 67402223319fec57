#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bitap/ensembles.hpp"
#include "bitap/errors.hpp"

namespace bitap {

using ordered_json = nlohmann::ordered_json;

// %.17g — enough digits to round-trip any double, short for the common cases.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

// JSON value for a double; IEEE specials become the strings "+inf"/"-inf"/"nan"
// instead of nlohmann's default null.
inline ordered_json json_num(double v) {
    if (std::isnan(v)) return ordered_json("nan");
    if (std::isinf(v)) return ordered_json(v > 0 ? "+inf" : "-inf");
    return ordered_json(v);
}

namespace detail {

inline void put_u32_le(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                          (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32_le(std::ifstream& f) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

} // namespace detail

// Binary coupling-matrix container:
//   bytes 0-7   magic "BITAPM1\0"
//   bytes 8-11  n1 (uint32, little endian)
//   bytes 12-15 n2 (uint32, little endian)
//   bytes 16-   n1*n2 doubles, row major, native IEEE-754 little endian
// A JSON sidecar at <path>.json records model, beta, and seed.
inline void save_matrix(const std::string& path, const CouplingMatrix& w) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw usage_error("save_matrix: cannot open " + path + " for writing");
    const char magic[8] = {'B', 'I', 'T', 'A', 'P', 'M', '1', '\0'};
    f.write(magic, 8);
    detail::put_u32_le(f, std::uint32_t(w.n1));
    detail::put_u32_le(f, std::uint32_t(w.n2));
    // Eigen stores column major; emit rows explicitly
    for (Eigen::Index i = 0; i < w.entries.rows(); ++i) {
        Eigen::VectorXd row = w.entries.row(i);
        f.write(reinterpret_cast<const char*>(row.data()), sizeof(double) * row.size());
    }
    if (!f) throw usage_error("save_matrix: write to " + path + " failed");
    f.close();

    ordered_json side;
    side["model"] = model_name(w.model);
    side["beta"] = json_num(w.beta);
    side["seed"] = w.seed;
    std::ofstream sf(path + ".json", std::ios::trunc);
    if (!sf) throw usage_error("save_matrix: cannot open " + path + ".json for writing");
    sf << side.dump(2) << "\n";
}

inline CouplingMatrix load_matrix(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw usage_error("load_matrix: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    const char expect[8] = {'B', 'I', 'T', 'A', 'P', 'M', '1', '\0'};
    if (!f || std::memcmp(magic, expect, 8) != 0)
        throw usage_error("load_matrix: " + path + " is not a BITAPM1 matrix file");
    std::uint32_t n1 = detail::get_u32_le(f);
    std::uint32_t n2 = detail::get_u32_le(f);
    if (!f || n1 < 1 || n2 < 1 || n2 > n1)
        throw usage_error("load_matrix: invalid dimensions in " + path);

    CouplingMatrix w;
    w.n1 = int(n1);
    w.n2 = int(n2);
    w.alpha = double(n2) / double(n1);
    w.entries.resize(n1, n2);
    for (std::uint32_t i = 0; i < n1; ++i) {
        Eigen::VectorXd row(n2);
        f.read(reinterpret_cast<char*>(row.data()), sizeof(double) * n2);
        if (!f) throw usage_error("load_matrix: " + path + " truncated at row " + std::to_string(i));
        w.entries.row(i) = row;
    }

    std::ifstream sf(path + ".json");
    if (!sf) throw usage_error("load_matrix: missing sidecar " + path + ".json");
    ordered_json side;
    try {
        sf >> side;
        w.model = model_from_name(side.at("model").get<std::string>());
        w.beta = side.at("beta").get<double>();
        w.seed = side.at("seed").get<std::uint64_t>();
    } catch (const ordered_json::exception& e) {
        throw usage_error("load_matrix: malformed sidecar " + path + ".json: " + e.what());
    }
    return w;
}

// Singular-value spectrum as text: one value per line, %.17g, descending.
inline void save_spectrum(const std::string& path, const Eigen::VectorXd& sigmas) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw usage_error("save_spectrum: cannot open " + path + " for writing");
    Eigen::VectorXd sorted = sigmas;
    std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<double>());
    for (Eigen::Index i = 0; i < sorted.size(); ++i) f << fmt_g17(sorted(i)) << "\n";
}

inline Eigen::VectorXd load_spectrum(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw usage_error("load_spectrum: cannot open " + path);
    std::vector<double> vals;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        char* end = nullptr;
        double v = std::strtod(line.c_str(), &end);
        if (end == line.c_str())
            throw usage_error("load_spectrum: unparseable line '" + line + "' in " + path);
        if (v < 0.0) throw usage_error("load_spectrum: negative singular value in " + path);
        vals.push_back(v);
    }
    if (vals.empty()) throw usage_error("load_spectrum: " + path + " contains no values");
    Eigen::VectorXd out = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
    std::sort(out.data(), out.data() + out.size(), std::greater<double>());
    return out;
}

// CSV with the run configuration echoed as leading '#' comment lines, then one
// header row. Numeric cells are %.17g. No timestamps anywhere, so identical
// inputs produce byte-identical files.
class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : f_(path, std::ios::trunc) {
        if (!f_) throw usage_error("CsvWriter: cannot open " + path + " for writing");
    }
    void config(const std::vector<std::pair<std::string, std::string>>& kv) {
        for (const auto& [k, v] : kv) f_ << "# " << k << "=" << v << "\n";
    }
    void header(const std::vector<std::string>& cols) { line(cols); }
    void row(const std::vector<std::string>& cells) { line(cells); }
    static std::string num(double v) { return fmt_g17(v); }

  private:
    void line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) f_ << ",";
            f_ << cells[i];
        }
        f_ << "\n";
    }
    std::ofstream f_;
};

inline void save_json(const std::string& path, const ordered_json& j) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw usage_error("save_json: cannot open " + path + " for writing");
    f << j.dump(2) << "\n";
}

} // namespace bitap
