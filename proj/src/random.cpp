#include "lowrankcv/random.hpp"

#include <cmath>
#include <numbers>

namespace lowrankcv {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

RngSeed RngSeed::child(std::uint64_t index) const {
    return {master, mix64(stream ^ mix64(index + kGolden))};
}

CounterRng::CounterRng(RngSeed seed) : key_(mix64(seed.master ^ mix64(seed.stream + kGolden))) {}

std::uint64_t CounterRng::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) {
            return r % bound;
        }
    }
}

double CounterRng::normal() { return normal_quantile(uniform()); }

double CounterRng::sign() { return (next_u64() >> 63) != 0 ? 1.0 : -1.0; }

double CounterRng::gamma(double shape) {
    if (shape < 1.0) {
        const double g = gamma(shape + 1.0);
        return g * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) {
            continue;
        }
        v = v * v * v;
        const double u = uniform();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
            return d * v;
        }
    }
}

double CounterRng::chi_square(double nu) { return 2.0 * gamma(0.5 * nu); }

double CounterRng::student_t(double nu) {
    const double z = normal();
    return z / std::sqrt(chi_square(nu) / nu);
}

double normal_quantile(double u) {
    // Acklam's rational approximation (relative error 1.15e-9) followed by one
    // Halley step on the exact CDF.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (!(u > 0.0 && u < 1.0)) {
        if (u == 0.0) {
            return -HUGE_VAL;
        }
        if (u == 1.0) {
            return HUGE_VAL;
        }
        return std::nan("");
    }

    double x = 0.0;
    if (u < p_low) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - p_low) {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley refinement. Work in the tail that keeps the CDF difference accurate.
    const double sqrt2pi = std::sqrt(2.0 * std::numbers::pi);
    double e = 0.0;
    if (x < 0.0) {
        e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - u;
    } else {
        e = (1.0 - u) - 0.5 * std::erfc(x / std::numbers::sqrt2);
    }
    const double t = e * sqrt2pi * std::exp(0.5 * x * x);
    x = x - t / (1.0 + 0.5 * x * t);
    return x;
}

}  // namespace lowrankcv
