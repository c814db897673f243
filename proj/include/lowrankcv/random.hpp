#ifndef LOWRANKCV_RANDOM_HPP
#define LOWRANKCV_RANDOM_HPP

#include <cstdint>

namespace lowrankcv {

/// Seed for one reproducible random stream.
struct RngSeed {
    std::uint64_t master = 0;
    std::uint64_t stream = 0;

    /// Seed of an independent child stream; used to key replicates and methods.
    RngSeed child(std::uint64_t index) const;
    bool operator==(const RngSeed&) const = default;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/**
 * Counter-based 64-bit generator. Output i is a pure function of
 * (key, i), so results are identical on every platform and streams can be
 * split without shared state.
 */
class CounterRng {
public:
    explicit CounterRng(RngSeed seed);

    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, bound); bound > 0.
    std::uint64_t below(std::uint64_t bound);
    /// Standard normal by inverse CDF.
    double normal();
    /// +1 or -1 with equal probability.
    double sign();
    /// Gamma(shape, 1), shape > 0 (Marsaglia-Tsang).
    double gamma(double shape);
    /// Chi-square with nu degrees of freedom.
    double chi_square(double nu);
    /// Student t with nu degrees of freedom.
    double student_t(double nu);

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Inverse of the standard normal CDF, accurate to about 1e-15 on (0, 1).
double normal_quantile(double u);

}  // namespace lowrankcv

#endif  // LOWRANKCV_RANDOM_HPP
