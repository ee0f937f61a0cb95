#pragma once

#include <cmath>
#include <vector>

#include "exitsim/error.hpp"

namespace exitsim {

/// Time series of an exit distribution function A_t.
struct ExitCDF {
    std::vector<double> times;
    std::vector<double> values;
    /// Standard errors; empty when the series is deterministic.
    std::vector<double> se;

    static constexpr double kMonotoneTolerance = 1e-10;

    std::size_t size() const { return times.size(); }
    double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }

    /// Throws DataError unless times increase and values are finite and
    /// nondecreasing within tolerance.
    void validate() const {
        if (times.size() != values.size() || (!se.empty() && se.size() != values.size())) {
            throw DataError("exit CDF columns differ in length");
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(values[i]) || !std::isfinite(times[i])) {
                throw DataError("exit CDF must be finite");
            }
            if (i > 0 && !(times[i] > times[i - 1])) throw DataError("exit CDF times must increase");
            if (i > 0 && values[i] < values[i - 1] - kMonotoneTolerance) {
                throw DataError("exit CDF must be nondecreasing");
            }
        }
    }
};

}  // namespace exitsim
