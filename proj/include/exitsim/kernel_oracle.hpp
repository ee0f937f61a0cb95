#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <numbers>
#include <vector>

#include "exitsim/error.hpp"
#include "exitsim/model.hpp"
#include "exitsim/numeric.hpp"

namespace exitsim {

/// Initial data for the fixed-boundary heat problems: a function on [lo, hi]
/// (zero outside) with a bound on its absolute value.
struct KernelData {
    std::function<double(double)> f;
    double lo = 0.0;
    double hi = 1.0;
    double sup = 0.0;
    /// Quadrature pieces on [lo, hi] are at least this many (aligns them with
    /// the cells of piecewise-linear grid data).
    std::size_t min_pieces = 1;

    double operator()(double x) const { return (x < lo || x > hi) ? 0.0 : f(x); }

    static KernelData from_function(std::function<double(double)> f, double lo, double hi,
                                    double sup) {
        if (!(lo < hi) || lo < 0.0) throw ParameterError("data support must be an interval in [0, inf)");
        return KernelData{std::move(f), lo, hi, sup, 1};
    }

    static KernelData from_bump(const Bump& b) {
        return KernelData{[b](double x) { return b(x); }, b.support_lo(), b.support_hi(),
                          std::abs(b.peak()), 1};
    }

    static KernelData from_density(const InitialDensity& d) { return from_bump(d.bump()); }

    /// sin(k pi x) on [0, 1].
    static KernelData sine_mode(int k, double amplitude = 1.0) {
        return KernelData{[k, amplitude](double x) {
                              return amplitude * std::sin(k * std::numbers::pi * x);
                          },
                          0.0, 1.0, std::abs(amplitude), static_cast<std::size_t>(std::max(k, 1))};
    }

    /// Piecewise-linear interpolant of values on the uniform grid of [0, 1].
    static KernelData from_grid(std::vector<double> values) {
        if (values.size() < 2) throw ParameterError("grid data needs at least two nodes");
        double sup = 0.0;
        for (double v : values) {
            if (!std::isfinite(v)) throw DataError("grid data must be finite");
            sup = std::max(sup, std::abs(v));
        }
        const std::size_t cells = values.size() - 1;
        auto shared = std::make_shared<std::vector<double>>(std::move(values));
        return KernelData{[shared, cells](double x) {
                              const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(cells);
                              const auto j = std::min(static_cast<std::size_t>(pos), cells - 1);
                              const double w = pos - static_cast<double>(j);
                              return (1.0 - w) * (*shared)[j] + w * (*shared)[j + 1];
                          },
                          0.0, 1.0, sup, cells};
    }
};

/// Heat problem d_t eta = (a/2) D^2 eta started at t0 from `data`.
class KernelProblem {
public:
    KernelProblem(double a_eff, KernelData data, double t0 = 0.0)
        : a_(a_eff), data_(std::move(data)), t0_(t0) {
        if (!(a_eff > 0.0) || !std::isfinite(a_eff)) throw ParameterError("diffusion must be positive");
        if (!std::isfinite(t0)) throw ParameterError("start time must be finite");
    }

    double a() const { return a_; }
    double t0() const { return t0_; }
    const KernelData& data() const { return data_; }

    /// Integral of g(y) f(y) over the data support with composite 64-point
    /// Gauss-Legendre; pieces shrink with the kernel width sqrt(a s).
    template <class G>
    double integrate(G&& g, double s) const {
        const double width = s > 0.0 ? std::sqrt(a_ * s) : 1.0;
        std::size_t pieces = 1;
        const double len = data_.hi - data_.lo;
        while ((pieces < data_.min_pieces || len / static_cast<double>(pieces) > 4.0 * width) &&
               pieces < (std::size_t{1} << 16)) {
            pieces *= 2;
        }
        return gauss_legendre_64().integrate(
            [&](double y) { return data_.f(y) * g(y); }, data_.lo, data_.hi, pieces);
    }

private:
    double a_;
    KernelData data_;
    double t0_;
};

namespace detail {

inline double elapsed(const KernelProblem& p, double t) {
    const double s = t - p.t0();
    if (!(s > 0.0)) throw DomainError("time must be after the start time");
    return s;
}

}  // namespace detail

/// Image-kernel solution on the half-line (0, inf) with absorption at 0.
inline double halfline_solution(const KernelProblem& p, double t, double x) {
    const double s = detail::elapsed(p, t);
    if (x < 0.0) throw DomainError("half-line solution needs x >= 0");
    const double two_as = 2.0 * p.a() * s;
    const double norm = 1.0 / std::sqrt(std::numbers::pi * two_as);
    return norm * p.integrate(
                      [&](double y) {
                          const double d = x - y;
                          // e^{-(x-y)^2/2as} - e^{-(x+y)^2/2as}, cancellation-free
                          return -std::exp(-d * d / two_as) * std::expm1(-2.0 * x * y / (p.a() * s));
                      },
                      s);
}

/// Mass of the half-line solution at time t.
inline double halfline_mass(const KernelProblem& p, double t) {
    const double s = detail::elapsed(p, t);
    const double scale = 1.0 / std::sqrt(2.0 * p.a() * s);
    return p.integrate([&](double y) { return std::erf(y * scale); }, s);
}

/// Boundary flux (a/2) D psi_t(0+) of the half-line solution. The half-line
/// mass decreases at exactly this rate.
inline double mass_flux(const KernelProblem& p, double t) {
    const double s = detail::elapsed(p, t);
    const double two_as = 2.0 * p.a() * s;
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * p.a() * s * s * s);
    return norm * p.integrate([&](double y) { return y * std::exp(-y * y / two_as); }, s);
}

/// Sine-series solution on (0, 1) with absorption at both ends, truncated
/// at a certified number of terms.
class IntervalSeries {
public:
    static constexpr double kTailTolerance = 1e-10;
    static constexpr int kMinTerms = 16;
    static constexpr int kMaxTerms = 1 << 20;

    /// Without `terms` the smallest K >= 16 whose tail bound is below 1e-10 is used.
    IntervalSeries(const KernelProblem& p, double t, std::optional<int> terms = std::nullopt)
        : problem_(p), s_(t - p.t0()) {
        if (s_ < 0.0) throw DomainError("time must not precede the start time");
        if (terms && *terms < 1) throw ParameterError("series needs at least one term");
        if (p.data().lo < 0.0 || p.data().hi > 1.0) throw ParameterError("data must live on [0, 1]");
        if (s_ == 0.0) return;
        const double q = p.a() * std::numbers::pi * std::numbers::pi * s_ / 2.0;
        int K = kMinTerms;
        if (terms) {
            K = *terms;
        } else {
            while (tail_for(K, q) >= kTailTolerance) {
                if (K >= kMaxTerms) throw ResourceError("series truncation too long");
                ++K;
            }
        }
        tail_ = tail_for(K, q);
        coefficients(K, q);
    }

    int terms() const { return static_cast<int>(coef_.size()); }
    /// Bound on the neglected part of the series (sup norm).
    double tail_bound() const { return tail_; }
    double elapsed() const { return s_; }

    double value(double x) const {
        if (x < 0.0 || x > 1.0) throw DomainError("interval solution needs x in [0, 1]");
        if (s_ == 0.0) return problem_.data()(x);
        if (x == 0.0 || x == 1.0) return 0.0;
        return sum(x, false);
    }

    /// Spatial derivative of the truncated series.
    double derivative(double x) const {
        if (x < 0.0 || x > 1.0) throw DomainError("interval solution needs x in [0, 1]");
        if (s_ == 0.0) throw DomainError("derivative needs positive elapsed time");
        return sum(x, true);
    }

    /// Integral over (0, 1) of the truncated series.
    double mass() const {
        if (s_ == 0.0) return problem_.integrate([](double) { return 1.0; }, 0.0);
        double m = 0.0;
        for (std::size_t i = 0; i < coef_.size(); i += 2) {  // odd k only
            const double k = static_cast<double>(i + 1);
            m += coef_[i] * 2.0 / (k * std::numbers::pi);
        }
        return m;
    }

private:
    double tail_for(int K, double q) const {
        const double sup = problem_.data().sup;
        const double k1 = K + 1.0;
        return 2.0 * sup * std::exp(-q * k1 * k1) / (1.0 - std::exp(-q * (2.0 * K + 3.0)));
    }

    // c_k e^{-q k^2} with c_k = 2 int f sin(k pi y) dy; sines by recurrence.
    void coefficients(int K, double q) {
        coef_.assign(static_cast<std::size_t>(K), 0.0);
        const auto& rule = gauss_legendre_64();
        const KernelData& d = problem_.data();
        std::size_t pieces = std::max<std::size_t>(d.min_pieces, static_cast<std::size_t>(K / 8 + 1));
        std::size_t p2 = 1;
        while (p2 < pieces) p2 *= 2;
        const double h = (d.hi - d.lo) / static_cast<double>(p2);
        for (std::size_t piece = 0; piece < p2; ++piece) {
            const double mid = d.lo + h * (static_cast<double>(piece) + 0.5);
            for (std::size_t n = 0; n < rule.nodes().size(); ++n) {
                const double y = mid + 0.5 * h * rule.nodes()[n];
                const double fw = d.f(y) * 0.5 * h * rule.weights()[n];
                if (fw == 0.0) continue;
                const double theta = std::numbers::pi * y;
                const double c2 = 2.0 * std::cos(theta);
                double prev = 0.0, cur = std::sin(theta);
                for (int k = 1; k <= K; ++k) {
                    coef_[static_cast<std::size_t>(k - 1)] += 2.0 * fw * cur;
                    const double next = c2 * cur - prev;
                    prev = cur;
                    cur = next;
                }
            }
        }
        for (int k = 1; k <= K; ++k) coef_[static_cast<std::size_t>(k - 1)] *= std::exp(-q * k * k);
    }

    double sum(double x, bool deriv) const {
        double total = 0.0;
        for (std::size_t i = 0; i < coef_.size(); ++i) {
            const double k = static_cast<double>(i + 1);
            const double arg = k * std::numbers::pi * x;
            total += deriv ? coef_[i] * k * std::numbers::pi * std::cos(arg) : coef_[i] * std::sin(arg);
        }
        return total;
    }

    KernelProblem problem_;
    double s_;
    double tail_ = 0.0;
    std::vector<double> coef_;
};

/// Value of the absorbing-interval solution at (t, x).
inline double interval_solution(const KernelProblem& p, double t, double x,
                                std::optional<int> terms = std::nullopt) {
    if (t - p.t0() < 0.0) throw DomainError("time must not precede the start time");
    return IntervalSeries(p, t, terms).value(x);
}

}  // namespace exitsim
