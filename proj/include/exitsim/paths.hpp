#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "exitsim/error.hpp"
#include "exitsim/numeric.hpp"
#include "exitsim/rng.hpp"

namespace exitsim {

inline constexpr int kMaxPathLevel = 30;

/// Sample of a standard Brownian motion on the dyadic grid t_i = i T / 2^level.
///
/// A path of level L is, by construction, level 0 (a single N(0, T) endpoint)
/// refined L times by bridge midpoints. Midpoint draws are addressed by
/// (interval index, level), so every level of a given (seed, stream) is
/// nested in the next one.
class BrownianPath {
public:
    BrownianPath() = default;

    /// Path with explicit values (tests, CSV import). `values.size()` must be
    /// 2^level + 1 and values[0] must be 0. Such a path cannot be refined.
    static BrownianPath from_values(double horizon, std::vector<double> values) {
        if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
        const std::size_t n = values.size();
        if (n < 2 || ((n - 1) & (n - 2)) != 0) {
            throw ParameterError("path length must be 2^level + 1");
        }
        if (values[0] != 0.0) throw DataError("path must start at 0");
        for (double v : values) {
            if (!std::isfinite(v)) throw DataError("path values must be finite");
        }
        BrownianPath p;
        p.horizon_ = horizon;
        p.level_ = 0;
        while ((std::size_t{1} << p.level_) + 1 < n) ++p.level_;
        p.values_ = std::move(values);
        p.seeded_ = false;
        return p;
    }

    /// The zero path b = 0 at the given level.
    static BrownianPath zero(double horizon, int level) {
        check_level(level);
        return from_values(horizon, std::vector<double>((std::size_t{1} << level) + 1, 0.0));
    }

    int level() const { return level_; }
    double horizon() const { return horizon_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    bool seeded() const { return seeded_; }

    std::size_t steps() const { return values_.size() - 1; }
    double dt() const { return std::ldexp(horizon_, -level_); }
    double time(std::size_t i) const { return static_cast<double>(i) * dt(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    /// Grid index of t; throws AlignmentError when t is not a grid time.
    std::size_t index_of(double t) const {
        const long long i = grid_index(t, dt());
        if (i < 0 || static_cast<std::size_t>(i) > steps()) {
            throw AlignmentError("time " + format_double(t) + " is not on the path grid");
        }
        return static_cast<std::size_t>(i);
    }

    double at(double t) const { return values_[index_of(t)]; }

    /// Same draw identity: both paths come from one (seed, stream, horizon).
    bool same_source(const BrownianPath& other) const {
        if (seeded_ && other.seeded_) {
            return seed_ == other.seed_ && stream_ == other.stream_ && horizon_ == other.horizon_;
        }
        return horizon_ == other.horizon_ && level_ == other.level_ && values_ == other.values_;
    }

    friend BrownianPath sample_path(std::uint64_t seed, std::uint64_t stream, double horizon,
                                    int level);
    friend BrownianPath refine(const BrownianPath& path);

    /// Restriction to a coarser level (exact: keeps every 2^(level - target) node).
    BrownianPath coarsen(int target) const {
        if (target < 0 || target > level_) throw ParameterError("coarsen target out of range");
        BrownianPath p = *this;
        p.level_ = target;
        const std::size_t stride = std::size_t{1} << (level_ - target);
        p.values_.resize((std::size_t{1} << target) + 1);
        for (std::size_t i = 0; i < p.values_.size(); ++i) p.values_[i] = values_[i * stride];
        return p;
    }

    static void check_level(int level) {
        if (level > kMaxPathLevel) throw ResourceError("path level above " +
                                                       std::to_string(kMaxPathLevel));
        if (level < 0) throw ParameterError("path level must be nonnegative");
    }

private:
    double horizon_ = 1.0;
    int level_ = 0;
    std::vector<double> values_{0.0, 0.0};
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    bool seeded_ = false;
};

/// One level of bridge refinement; coarse nodes are kept bit for bit.
inline BrownianPath refine(const BrownianPath& path) {
    if (!path.seeded_) throw ParameterError("only seeded paths can be refined");
    BrownianPath::check_level(path.level_ + 1);
    const RandomStream rng(path.seed_, path.stream_);
    const double sd = 0.5 * std::sqrt(path.dt());
    const auto sub = static_cast<std::uint32_t>(path.level_ + 1);
    BrownianPath out = path;
    out.level_ = path.level_ + 1;
    out.values_.assign(2 * path.steps() + 1, 0.0);
    for (std::size_t i = 0; i < path.steps(); ++i) {
        out.values_[2 * i] = path.values_[i];
        out.values_[2 * i + 1] = 0.5 * (path.values_[i] + path.values_[i + 1]) +
                                 sd * rng.normal(i, DrawTag::path_midpoint, sub);
    }
    out.values_.back() = path.values_.back();
    return out;
}

inline BrownianPath sample_path(std::uint64_t seed, std::uint64_t stream, double horizon,
                                int level) {
    BrownianPath::check_level(level);
    if (level < 1) throw ParameterError("path level must be >= 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("horizon must be positive");
    const RandomStream rng(seed, stream);
    BrownianPath p;
    p.horizon_ = horizon;
    p.level_ = 0;
    p.seed_ = seed;
    p.stream_ = stream;
    p.seeded_ = true;
    p.values_ = {0.0, std::sqrt(horizon) * rng.normal(0, DrawTag::path_endpoint, 0)};
    while (p.level_ < level) p = refine(p);
    return p;
}

/// Boundary value of the time-reversed path: b_{t - s}, or b_0 = 0 when s >= t.
inline double reversed_boundary(const BrownianPath& path, double t, double s) {
    if (s < 0.0) throw DomainError("reversal lag must be nonnegative");
    const std::size_t it = path.index_of(t);
    const long long is = grid_index(s, path.dt());
    if (is < 0) throw AlignmentError("lag " + format_double(s) + " is not on the path grid");
    const auto lag = static_cast<std::size_t>(is);
    return lag >= it ? 0.0 : path[it - lag];
}

// ---------------------------------------------------------------------------
// CSV

inline void write_path_csv(std::ostream& out, const BrownianPath& path) {
    out << "# seed=" << path.seed() << " stream=" << path.stream() << " level=" << path.level()
        << " horizon=" << format_double(path.horizon()) << " seeded=" << (path.seeded() ? 1 : 0)
        << "\n";
    out << "time,value\n";
    for (std::size_t i = 0; i <= path.steps(); ++i) {
        out << format_double(path.time(i)) << ',' << format_double(path[i]) << '\n';
    }
}

/// Read a path written by write_path_csv. The header is checked against the
/// rows; a seeded path is re-sampled and compared, so a tampered file fails.
inline BrownianPath read_path_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw DataError("missing path header");
    std::uint64_t seed = 0, stream = 0;
    int level = -1;
    bool seeded = true;
    double horizon = 0.0;
    {
        std::istringstream hs(line.substr(2));
        std::string tok;
        while (hs >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw DataError("bad path header token '" + tok + "'");
            const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
            if (k == "seed") seed = std::stoull(v);
            else if (k == "stream") stream = std::stoull(v);
            else if (k == "level") level = std::stoi(v);
            else if (k == "horizon") horizon = std::stod(v);
            else if (k == "seeded") seeded = v != "0";
            else throw DataError("unknown path header key '" + k + "'");
        }
    }
    if (!std::getline(in, line) || line != "time,value") throw DataError("missing column header");
    std::vector<double> values;
    std::size_t row = 0;
    const double dt = horizon > 0.0 && level >= 0 ? std::ldexp(horizon, -level) : 0.0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError("bad path row");
        const double t = std::stod(line.substr(0, comma));
        const double v = std::stod(line.substr(comma + 1));
        if (grid_index(t, dt) != static_cast<long long>(row)) {
            throw AlignmentError("path row time does not match the grid");
        }
        values.push_back(v);
        ++row;
    }
    BrownianPath p = BrownianPath::from_values(horizon, std::move(values));
    if (p.level() != level) throw DataError("path header level does not match row count");
    if (!seeded) return p;
    const BrownianPath ref = sample_path(seed, stream, horizon, level);
    if (ref.values() != p.values()) throw DataError("path values do not match their seed");
    return ref;
}

}  // namespace exitsim
