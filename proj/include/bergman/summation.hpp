#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace bergman {

/// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class CompensatedComplexSum {
public:
    void add(std::complex<double> v) {
        re_.add(v.real());
        im_.add(v.imag());
    }
    std::complex<double> value() const { return {re_.value(), im_.value()}; }

private:
    CompensatedSum re_, im_;
};

/// A complex number held as (log-magnitude, argument).
struct LogPolar {
    double log_abs = -INFINITY;
    double arg = 0.0;

    static LogPolar from(std::complex<double> v) { return {std::log(std::abs(v)), std::arg(v)}; }
    LogPolar pow(int n) const { return {n * log_abs, std::remainder(n * arg, 2.0 * M_PI)}; }
    std::complex<double> scaled(double shift) const { return std::polar(std::exp(log_abs - shift), arg); }
};

/// Sum of terms given in log-polar form: returns the total as
/// exp(shift) * mantissa with the mantissa summed with compensation after
/// dividing every term by exp(shift), shift = max log-magnitude.
struct ScaledSum {
    double shift = -INFINITY;
    std::complex<double> mantissa{0.0, 0.0};

    std::complex<double> value() const {
        return std::isinf(shift) ? std::complex<double>{} : mantissa * std::exp(shift);
    }
};

ScaledSum log_polar_sum(std::span<const LogPolar> terms);

/// log(sum exp(v_i)) without overflow; -inf for an empty input.
double log_sum_exp(std::span<const double> values);

}  // namespace bergman
