#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "exitsim/error.hpp"
#include "exitsim/model.hpp"
#include "exitsim/numeric.hpp"

namespace exitsim {

namespace fs = std::filesystem;

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return s;
}

/// Hash of the canonical JSON dump of the configuration.
inline std::string config_hash(const RunConfig& cfg) { return hex64(fnv1a64(config_to_json(cfg).dump())); }

/// Write through a temporary in the same directory, then rename over `path`.
inline void write_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ResourceError("cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw ResourceError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ResourceError("cannot rename onto '" + path.string() + "'");
    }
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// CSV

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(const std::vector<double>& row) {
        if (row.size() != header_.size()) throw DataError("csv row has the wrong width");
        std::vector<std::string> cells;
        for (double v : row) cells.push_back(format_double(v));
        rows_.push_back(std::move(cells));
    }
    void add_text(std::vector<std::string> row) {
        if (row.size() != header_.size()) throw DataError("csv row has the wrong width");
        rows_.push_back(std::move(row));
    }
    std::size_t rows() const { return rows_.size(); }

    std::string str() const {
        std::string s;
        append_row(s, header_);
        for (const auto& r : rows_) append_row(s, r);
        return s;
    }

private:
    static void append_row(std::string& s, const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) s += ',';
            s += r[i];
        }
        s += '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// JSON number that survives NaN/inf (written as null).
inline nlohmann::json json_number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

// ---------------------------------------------------------------------------
// SVG line plots

struct PlotSeries {
    std::string name;
    std::vector<double> x, y;
};

struct PlotSpec {
    std::string title;
    std::string x_label, y_label;
    bool log_x = false, log_y = false;
};

inline std::string svg_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
    const double W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 55;
    auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0.0) && (!spec.log_y || y > 0.0);
    };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    }
    if (!(x0 <= x1)) x0 = 0, x1 = 1;
    if (!(y0 <= y1)) y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double v) { return ml + (tx(v) - x0) / (x1 - x0) * (W - ml - mr); };
    auto py = [&](double v) { return H - mb - (ty(v) - y0) / (y1 - y0) * (H - mt - mb); };
    auto tick = [](double v, bool lg) { return format_double(lg ? std::pow(10.0, v) : v); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << spec.title << "</text>\n";
    o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
        const double gx = ml + (W - ml - mr) * i / 4.0, gy = H - mb - (H - mt - mb) * i / 4.0;
        o << "<text x=\"" << gx << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
          << tick(fx, spec.log_x).substr(0, 8) << "</text>\n";
        o << "<text x=\"" << ml - 4 << "\" y=\"" << gy + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
          << tick(fy, spec.log_y).substr(0, 8) << "</text>\n";
    }
    o << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << spec.x_label << "</text>\n";
    o << "<text x=\"14\" y=\"" << (mt + H - mb) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 "
      << (mt + H - mb) / 2 << ")\" text-anchor=\"middle\">" << spec.y_label << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* col = colors[k % 6];
        o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        }
        o << "\"/>\n";
        o << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 16 + 14 * static_cast<double>(k) << "\" font-size=\"11\" fill=\""
          << col << "\">" << s.name << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

// ---------------------------------------------------------------------------
// Output directory with an append-only manifest

class OutputDir {
public:
    OutputDir(fs::path dir, std::string kind, const RunConfig& cfg)
        : dir_(std::move(dir)), kind_(std::move(kind)), cfg_(cfg) {}

    const fs::path& path() const { return dir_; }

    void write(const std::string& name, const std::string& content) {
        ensure_dir();
        write_atomic(dir_ / name, content);
        files_.push_back({{"name", name}, {"bytes", content.size()}, {"fnv1a", hex64(fnv1a64(content))}});
    }
    void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

    /// Append this run to manifest.json. Existing entries are kept verbatim.
    void commit(const std::vector<std::uint64_t>& seeds, const std::string& status) {
        ensure_dir();
        const fs::path mpath = dir_ / "manifest.json";
        nlohmann::json manifest = {{"runs", nlohmann::json::array()}};
        if (fs::exists(mpath)) {
            try {
                manifest = nlohmann::json::parse(read_file(mpath));
            } catch (const nlohmann::json::parse_error&) {
                throw DataError("existing manifest.json is not valid JSON");
            }
            if (!manifest.contains("runs") || !manifest["runs"].is_array()) {
                throw DataError("existing manifest.json has no runs array");
            }
        }
        nlohmann::json entry = {{"kind", kind_},
                                {"status", status},
                                {"config_hash", config_hash(cfg_)},
                                {"config", config_to_json(cfg_)},
                                {"seeds", seeds},
                                {"files", files_}};
        manifest["runs"].push_back(entry);
        write_atomic(mpath, manifest.dump(2) + "\n");
    }

private:
    void ensure_dir() {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_)) throw ResourceError("cannot create output directory '" + dir_.string() + "'");
    }

    fs::path dir_;
    std::string kind_;
    RunConfig cfg_;
    nlohmann::json files_ = nlohmann::json::array();
};

}  // namespace exitsim
