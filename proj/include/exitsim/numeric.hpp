#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include "exitsim/error.hpp"

namespace exitsim {

// ---------------------------------------------------------------------------
// Quadrature

/// Gauss-Legendre rule with a fixed number of nodes on [-1, 1].
class GaussLegendre {
public:
    explicit GaussLegendre(int nodes) {
        const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(nodes);
        for (double z : zeros) {
            const double dp = boost::math::legendre_p_prime(nodes, z);
            const double w = 2.0 / ((1.0 - z * z) * dp * dp);
            if (z == 0.0) {
                nodes_.push_back(0.0);
                weights_.push_back(w);
            } else {
                nodes_.push_back(z);
                weights_.push_back(w);
                nodes_.push_back(-z);
                weights_.push_back(w);
            }
        }
    }

    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> weights() const { return weights_; }

    /// Integral of f over [lo, hi] split into `pieces` equal subintervals.
    template <class F>
    double integrate(F&& f, double lo, double hi, std::size_t pieces = 1) const {
        const double h = (hi - lo) / static_cast<double>(pieces);
        double total = 0.0;
        for (std::size_t p = 0; p < pieces; ++p) {
            const double a = lo + h * static_cast<double>(p);
            const double mid = a + 0.5 * h;
            double s = 0.0;
            for (std::size_t i = 0; i < nodes_.size(); ++i) {
                s += weights_[i] * f(mid + 0.5 * h * nodes_[i]);
            }
            total += 0.5 * h * s;
        }
        return total;
    }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// The 64-node rule used by the kernel oracle (built once).
inline const GaussLegendre& gauss_legendre_64() {
    static const GaussLegendre rule(64);
    return rule;
}

/// Adaptive Gauss-Kronrod (61 point) integration.
template <class F>
double adaptive_integrate(F&& f, double lo, double hi, double tolerance = 1e-14,
                          unsigned max_depth = 25) {
    double error = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, max_depth,
                                                                         tolerance, &error);
}

// ---------------------------------------------------------------------------
// Linear algebra

/// Solve a tridiagonal system in place (Thomas algorithm).
/// `lower[i]` couples row i to i-1, `upper[i]` couples row i to i+1.
inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::span<double> rhs,
                              std::vector<double>& scratch) {
    const std::size_t n = diag.size();
    scratch.resize(n);
    double denom = diag[0];
    scratch[0] = upper.empty() ? 0.0 : upper[0] / denom;
    rhs[0] /= denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = (i + 1 < n) ? upper[i] / denom : 0.0;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

// ---------------------------------------------------------------------------
// Statistics

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

/// Streaming mean / standard error accumulator (Welford).
class MeanAccumulator {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    Estimate estimate() const {
        return {mean_, n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0};
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline Estimate mean_and_se(std::span<const double> xs) {
    MeanAccumulator acc;
    for (double x : xs) acc.add(x);
    return acc.estimate();
}

/// Quantile with linear interpolation between order statistics (type 7).
inline double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw DataError("quantile of an empty sample");
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= xs.size()) return xs.back();
    return xs[i] + frac * (xs[i + 1] - xs[i]);
}

inline double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

inline Quartiles quartiles(const std::vector<double>& xs) {
    return {quantile(xs, 0.25), quantile(xs, 0.5), quantile(xs, 0.75)};
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// ---------------------------------------------------------------------------
// Formatting

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

/// Index of a time on a uniform grid, or -1 when it is not a grid node.
inline long long grid_index(double time, double step, double tolerance = 1e-9) {
    const double pos = time / step;
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) > tolerance * std::max(1.0, std::abs(pos))) return -1;
    return static_cast<long long>(nearest);
}

}  // namespace exitsim
