#include "doctest.h"

#include <cmath>

#include "lowrankcv/errors.hpp"
#include "lowrankcv/random_factors.hpp"

using namespace lowrankcv;

namespace {

struct Moments {
    double mean = 0.0;
    double se = 0.0;
};

template <class F>
Moments monte_carlo(int draws, F&& f) {
    double s = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double x = f(i);
        s += x;
        s2 += x * x;
    }
    const double mean = s / draws;
    const double var = (s2 - draws * mean * mean) / (draws - 1);
    return {mean, std::sqrt(var / draws)};
}

double sample_variance(const Matrix& e) {
    const double mean = e.mean();
    return (e.array() - mean).square().sum() / static_cast<double>(e.size() - 1);
}

}  // namespace

TEST_SUITE("stiefel") {
    TEST_CASE("orthonormal columns") {
        const Matrix v = sample_stiefel(30, 5, RngSeed{1, 0});
        CHECK((v.transpose() * v - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK_THROWS_AS(sample_stiefel(3, 4, RngSeed{1, 0}), DomainError);
        CHECK_THROWS_AS(sample_stiefel(3, 0, RngSeed{1, 0}), DomainError);
    }

    TEST_CASE("one by one is a fair sign") {
        CounterRng rng(RngSeed{2, 0});
        const int draws = 10000;
        int plus = 0;
        for (int i = 0; i < draws; ++i) {
            const double v = sample_stiefel(1, 1, rng)(0, 0);
            CHECK(std::abs(v) == 1.0);
            plus += v > 0 ? 1 : 0;
        }
        CHECK(std::abs(plus - draws / 2) <= 3.0 * std::sqrt(draws * 0.25));
    }

    TEST_CASE("second moment of an entry") {
        CounterRng rng(RngSeed{3, 0});
        const Index p = 10;
        const Moments m = monte_carlo(100000, [&](int) {
            const double v = sample_stiefel(p, 1, rng)(0, 0);
            return v * v;
        });
        CHECK(std::abs(m.mean - 1.0 / p) <= 3.0 * m.se);
    }

    TEST_CASE("fourth moment of an entry") {
        CounterRng rng(RngSeed{4, 0});
        const double p = 6.0;
        const Moments m = monte_carlo(200000, [&](int) {
            const double v = sample_stiefel(6, 2, rng)(0, 0);
            return v * v * v * v;
        });
        CHECK(std::abs(m.mean - 3.0 / (p * (p + 2.0))) <= 3.0 * m.se);
    }

    TEST_CASE("same seed, same frame") {
        CHECK(sample_stiefel(8, 3, RngSeed{9, 4}) == sample_stiefel(8, 3, RngSeed{9, 4}));
        CHECK(sample_stiefel(8, 3, RngSeed{9, 4}) != sample_stiefel(8, 3, RngSeed{9, 5}));
    }
}

TEST_SUITE("rotations") {
    TEST_CASE("one by one") {
        CHECK(std::abs(sample_rotation(1, RngSeed{1, 0})(0, 0)) == 1.0);
    }

    TEST_CASE("orthogonal and singular-value preserving") {
        const Matrix q = sample_rotation(20, RngSeed{6, 0});
        CHECK((q.transpose() * q - Matrix::Identity(20, 20)).cwiseAbs().maxCoeff() <= 1e-10);
        const Matrix x = gen_noise(NoiseSpec::white(), 20, 7, 1.0, RngSeed{7, 0});
        const Vector d0 = svd(x).d;
        const Vector d1 = svd(q * x).d;
        CHECK((d0 - d1).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_SUITE("factors") {
    TEST_CASE("dense sparsity gives scaled signs") {
        const FactorPair f = gen_factors(FactorSpec::sparse(1.0), 25, 16, 3, RngSeed{8, 0});
        CHECK((f.u.array().abs() - 1.0 / 5.0).abs().maxCoeff() < 1e-15);
        CHECK((f.v.array().abs() - 1.0 / 4.0).abs().maxCoeff() < 1e-15);
        for (Index j = 0; j < 3; ++j) {
            CHECK(f.u.col(j).squaredNorm() == doctest::Approx(1.0));
        }
    }

    TEST_CASE("gaussian columns have unit squared norm on average") {
        const Moments m = monte_carlo(1000, [](int i) {
            return gen_factors(FactorSpec::gaussian(), 100, 10, 1,
                               RngSeed{10, static_cast<std::uint64_t>(i)})
                .u.col(0)
                .squaredNorm();
        });
        CHECK(std::abs(m.mean - 1.0) <= 3.0 * m.se);
    }

    TEST_CASE("sparse columns have the expected number of nonzeros") {
        const Moments m = monte_carlo(1000, [](int i) {
            const FactorPair f = gen_factors(FactorSpec::sparse(0.1), 100, 10, 1,
                                             RngSeed{11, static_cast<std::uint64_t>(i)});
            return static_cast<double>((f.u.col(0).array() != 0.0).count());
        });
        CHECK(std::abs(m.mean - 10.0) <= 3.0 * m.se);
    }

    TEST_CASE("stiefel factors are orthonormal") {
        const FactorPair f = gen_factors(FactorSpec::stiefel(), 40, 20, 4, RngSeed{12, 0});
        CHECK((f.u.transpose() * f.u - Matrix::Identity(4, 4)).norm() < 1e-12);
        CHECK((f.v.transpose() * f.v - Matrix::Identity(4, 4)).norm() < 1e-12);
    }

    TEST_CASE("orthonormalize flag") {
        FactorSpec spec = FactorSpec::sparse(0.3);
        spec.orthonormalize = true;
        const FactorPair f = gen_factors(spec, 60, 30, 3, RngSeed{13, 0});
        CHECK((f.u.transpose() * f.u - Matrix::Identity(3, 3)).norm() < 1e-12);
    }
}

TEST_SUITE("noise") {
    TEST_CASE("white variance") {
        const Matrix e = gen_noise(NoiseSpec::white(), 1000, 1000, 2.0, RngSeed{14, 0});
        CHECK(std::abs(sample_variance(e) / 2.0 - 1.0) <= 0.01);
    }

    TEST_CASE("heavy-tailed variance") {
        const Matrix e = gen_noise(NoiseSpec::heavy(3.0), 1000, 1000, 1.0, RngSeed{15, 0});
        CHECK(std::abs(sample_variance(e) - 1.0) <= 0.05);
    }

    TEST_CASE("colored variance") {
        // With nu = 3 the per-row and per-column scales have infinite variance, so
        // one matrix carries little information; pool independent draws instead.
        double pooled = 0.0;
        for (std::uint64_t s = 0; s < 40; ++s) {
            const Matrix e = gen_noise(NoiseSpec::colored(3.0, 3.0), 500, 500, 1.0, RngSeed{16, s});
            pooled += e.squaredNorm() / static_cast<double>(e.size());
        }
        CHECK(std::abs(pooled / 40.0 - 1.0) <= 0.10);
        const Matrix e5 = gen_noise(NoiseSpec::colored(5.0, 5.0), 1000, 1000, 1.0, RngSeed{17, 0});
        CHECK(std::abs(sample_variance(e5) - 1.0) <= 0.10);
    }

    TEST_CASE("degrees of freedom must give a finite variance") {
        CHECK_THROWS_AS(gen_noise(NoiseSpec::heavy(2.0), 3, 3, 1.0, RngSeed{1, 0}), DomainError);
        CHECK_THROWS_AS(gen_noise(NoiseSpec::colored(3.0, 1.5), 3, 3, 1.0, RngSeed{1, 0}),
                        DomainError);
    }
}

TEST_SUITE("model") {
    TEST_CASE("zero strengths leave only noise") {
        const FactorSample s = sample_model(20, 10, {0.0, 0.0}, FactorSpec::gaussian(),
                                            NoiseSpec::white(), 1.0, RngSeed{17, 0});
        CHECK((s.x - s.e).norm() == 0.0);
    }

    TEST_CASE("noiseless sample has the planted rank") {
        const FactorSample s = sample_model(40, 20, {5.0, 3.0, 1.0}, FactorSpec::gaussian(),
                                            NoiseSpec::white(), 0.0, RngSeed{18, 0});
        const Vector d = svd(s.x).d;
        CHECK(d(2) > 1e-3);
        CHECK(d(3) <= 1e-8 * d(0));
        CHECK((s.x - s.signal()).norm() == 0.0);
    }

    TEST_CASE("weak design shape") {
        const FactorSample s = sample_model(100, 50, {10, 9, 8, 7, 6, 5}, FactorSpec::gaussian(),
                                            NoiseSpec::white(), 1.0, RngSeed{19, 0});
        CHECK(s.x.rows() == 100);
        CHECK(s.x.cols() == 50);
        CHECK(s.u.cols() == 6);
        CHECK(s.d(5) == 5.0);
    }

    TEST_CASE("strengths are validated") {
        CHECK_THROWS_AS(sample_model(10, 5, {1.0, 2.0}, FactorSpec::gaussian(), NoiseSpec::white(),
                                     1.0, RngSeed{1, 0}),
                        DomainError);
    }

    TEST_CASE("reproducible from the seed") {
        const auto draw = [] {
            return sample_model(30, 12, {4.0, 2.0}, FactorSpec::sparse(0.2),
                                NoiseSpec::colored(4.0, 5.0), 1.0, RngSeed{20, 1})
                .x;
        };
        CHECK(draw() == draw());
    }
}

TEST_SUITE("frame projection") {
    TEST_CASE("full projection has no defect") {
        const Matrix u = sample_stiefel(12, 3, RngSeed{21, 0});
        CHECK(frame_projection_defect(u, 12, RngSeed{22, 0}) <= 1e-20);
    }

    // Corrected bound: (1/2) k (k+1) (1 - q/p) p^2 / ((p-1)(p+2)) (1 - 2/(p(k+1))).
    double corrected_bound(double k, double p, double q) {
        return 0.5 * k * (k + 1.0) * (1.0 - q / p) * p * p / ((p - 1.0) * (p + 2.0)) *
               (1.0 - 2.0 / (p * (k + 1.0)));
    }

    double mean_defect(Index p, Index k, Index q, int draws, std::uint64_t seed) {
        double s = 0.0;
        for (int i = 0; i < draws; ++i) {
            const Matrix u = sample_stiefel(p, k, RngSeed{seed, static_cast<std::uint64_t>(2 * i)});
            s += frame_projection_defect(u, q, RngSeed{seed, static_cast<std::uint64_t>(2 * i + 1)});
        }
        return s / draws;
    }

    TEST_CASE("mean defect respects the corrected bound") {
        CHECK(mean_defect(50, 1, 25, 1000, 23) <= corrected_bound(1, 50, 25));
        for (const Index q : {5, 10, 20, 30}) {
            CHECK(mean_defect(40, 3, q, 300, 24 + q) <= corrected_bound(3, 40, q));
        }
    }

    TEST_CASE("the uncorrected bound is exceeded") {
        const double uncorrected = 0.5 * 1.0 * 2.0 * 0.25 * 0.5;
        CHECK(mean_defect(50, 1, 25, 1000, 23) > uncorrected);
    }
}
