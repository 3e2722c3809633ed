#include "bergman/summation.hpp"

#include <algorithm>

namespace bergman {

ScaledSum log_polar_sum(std::span<const LogPolar> terms) {
    ScaledSum out;
    for (const auto& t : terms) out.shift = std::max(out.shift, t.log_abs);
    if (std::isinf(out.shift)) return out;
    CompensatedComplexSum acc;
    for (const auto& t : terms) acc.add(t.scaled(out.shift));
    out.mantissa = acc.value();
    return out;
}

double log_sum_exp(std::span<const double> values) {
    double m = -INFINITY;
    for (double v : values) m = std::max(m, v);
    if (std::isinf(m)) return m;
    CompensatedSum acc;
    for (double v : values) acc.add(std::exp(v - m));
    return m + std::log(acc.value());
}

}  // namespace bergman
