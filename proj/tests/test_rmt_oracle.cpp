#include "doctest.h"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "lowrankcv/errors.hpp"
#include "lowrankcv/random.hpp"
#include "lowrankcv/rmt_oracle.hpp"

using namespace lowrankcv;
using doctest::Approx;

namespace {

// Stieltjes transform computed directly from the density by quadrature. The
// substitution t = a + (b - a) sin^2(theta / 2) removes the square-root edges.
double stieltjes_by_quadrature(double z, double gamma) {
    const auto [a, b] = mp_edges(gamma);
    const double w = b - a;
    const auto f = [&](double theta) {
        const double s = std::sin(0.5 * theta);
        const double c = std::cos(0.5 * theta);
        const double t = a + w * s * s;
        return mp_pdf(t, gamma) / (t - z) * w * s * c;
    };
    double m = integrate(f, 0.0, std::numbers::pi, 1e-13);
    if (gamma < 1.0) {
        m += (1.0 - gamma) / (0.0 - z);
    }
    return m;
}

Matrix random_symmetric(Index n, CounterRng& rng) {
    Matrix h(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j <= i; ++j) {
            h(i, j) = h(j, i) = rng.normal();
        }
    }
    return h;
}

}  // namespace

TEST_SUITE("marchenko-pastur") {
    TEST_CASE("edges") {
        CHECK(mp_edges(1.0).first == Approx(0.0));
        CHECK(mp_edges(1.0).second == Approx(4.0));
        CHECK(mp_edges(4.0).first == Approx(0.25));
        CHECK(mp_edges(4.0).second == Approx(2.25));
        const auto [a, b] = mp_edges(1e6);
        CHECK(std::abs(a - 1.0) <= 2.001e-3);
        CHECK(std::abs(b - 1.0) <= 2.001e-3);
        CHECK_THROWS_AS(mp_edges(0.0), DomainError);
    }

    TEST_CASE("density at the midpoint") {
        CHECK(mp_pdf(2.0, 1.0) == Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-12));
        CHECK(mp_pdf(5.0, 1.0) == 0.0);
        CHECK(mp_pdf(-1.0, 1.0) == 0.0);
    }

    TEST_CASE("cdf normalization, atom and agreement with the density") {
        for (const double g : {0.25, 0.5, 1.0, 2.0, 4.0}) {
            const auto [a, b] = mp_edges(g);
            CHECK(std::abs(mp_cdf(b, g) - 1.0) <= 1e-8);
            const double mid = 0.5 * (a + b);
            const double atom = std::max(0.0, 1.0 - g);
            const double w = b - a;
            const auto f = [&](double theta) {
                const double s = std::sin(0.5 * theta);
                const double c = std::cos(0.5 * theta);
                return mp_pdf(a + w * s * s, g) * w * s * c;
            };
            const double by_pdf = integrate(f, 0.0, 0.5 * std::numbers::pi, 1e-13);
            CHECK(mp_cdf(mid, g) == Approx(atom + by_pdf).epsilon(1e-8));
        }
        CHECK(mp_cdf(0.0, 0.25) == Approx(0.75));
        CHECK(mp_cdf(-1.0, 4.0) == 0.0);
    }
}

TEST_SUITE("stieltjes") {
    TEST_CASE("value at 6.25 for gamma = 1") {
        CHECK(stieltjes(6.25, 1.0) == Approx(-0.2).epsilon(1e-12));
        CHECK(stieltjes_by_quadrature(6.25, 1.0) == Approx(-0.2).epsilon(1e-8));
    }

    TEST_CASE("closed form matches quadrature") {
        for (const double g : {0.3, 1.0, 2.5}) {
            const double b = mp_edges(g).second;
            for (const double z : {b + 0.1, b + 1.0, 2.0 * b + 3.0}) {
                CHECK(stieltjes(z, g) == Approx(stieltjes_by_quadrature(z, g)).epsilon(1e-8));
            }
        }
    }

    TEST_CASE("tail and spike consistency") {
        CHECK(std::abs(1e6 * stieltjes(1e6, 1.0) + 1.0) < 1e-3);
        CHECK(stieltjes(6.25, 1.0) == Approx(-1.0 / (4.0 + 1.0)));
    }

    TEST_CASE("inverse") {
        CHECK(stieltjes_inverse(-0.2, 1.0) == Approx(6.25).epsilon(1e-12));
        CounterRng rng(RngSeed{5, 0});
        for (int t = 0; t < 20; ++t) {
            const double g = 0.2 + 4.0 * rng.uniform();
            const double m_edge = -1.0 / (1.0 / std::sqrt(g) + 1.0 / g);
            const double m = m_edge * (0.01 + 0.98 * rng.uniform());
            CHECK(stieltjes(stieltjes_inverse(m, g), g) == Approx(m).epsilon(1e-8));
        }
        double last = 0.0;
        for (const double m : {-0.1, -0.01, -1e-3, -1e-4}) {
            const double z = stieltjes_inverse(m, 1.0);
            CHECK(z > last);
            last = z;
        }
        CHECK(last > 1e3);
    }
}

TEST_SUITE("spiked limits") {
    TEST_CASE("single spike above the threshold") {
        const SpikedLimits lim = spiked_limits(SpikedModel(1.0, 1.0, {4.0}));
        CHECK(lim.factors[0].mu_bar == Approx(6.25));
        CHECK(lim.factors[0].theta2 == Approx(0.75));
        CHECK(lim.factors[0].phi2 == Approx(0.75));
        CHECK(lim.factors[0].above_threshold);
    }

    TEST_CASE("below the detection threshold sticks to the edge") {
        const SpikedLimits lim = spiked_limits(SpikedModel(1.0, 1.0, {0.9}));
        CHECK(lim.factors[0].mu_bar == Approx(4.0));
        CHECK(lim.factors[0].theta2 == 0.0);
        CHECK(lim.factors[0].phi2 == 0.0);
        CHECK_FALSE(lim.factors[0].above_threshold);
    }

    TEST_CASE("rectangular aspect ratio") {
        const SpikedLimits lim = spiked_limits(SpikedModel(2.0, 1.0, {3.0}));
        CHECK(lim.factors[0].theta2 == Approx((17.0 / 18.0) * (6.0 / 7.0)).epsilon(1e-12));
    }

    TEST_CASE("model validation") {
        CHECK_THROWS_AS(SpikedModel(1.0, 1.0, {2.0, 3.0}), DomainError);
        CHECK_THROWS_AS(SpikedModel(-1.0, 1.0, {2.0}), DomainError);
        CHECK_THROWS_AS(SpikedModel(1.0, 0.0, {2.0}), DomainError);
    }

    TEST_CASE("fluctuation covariance") {
        const SpikedModel above(1.0, 1.0, {4.0});
        Matrix s(1, 1);
        s(0, 0) = 32.0;
        CHECK(spiked_value_covariance(above, s)(0, 0) == Approx(46.875));
        CHECK(spiked_value_covariance(SpikedModel(1.0, 1.0, {0.5}), s)(0, 0) == 0.0);
        const SpikedModel two(1.0, 1.0, {4.0, 2.0});
        Matrix s2 = Matrix::Zero(2, 2);
        s2(0, 0) = 32.0;
        s2(1, 1) = 8.0;
        CHECK(spiked_value_covariance(two, s2)(0, 1) == 0.0);
    }
}

TEST_SUITE("frobenius penalty") {
    TEST_CASE("alpha values") {
        CHECK(frob_alpha(3.0, 1.0, 1.0) == Approx(1.0).epsilon(1e-14));
        CHECK(frob_alpha(0.5, 1.0, 1.0) == Approx(9.0));
        double prev = frob_alpha(1.01, 1.0, 1.0);
        for (double mu = 1.1; mu < 50.0; mu += 0.37) {
            const double a = frob_alpha(mu, 1.0, 1.0);
            CHECK(a < prev);
            prev = a;
        }
    }

    TEST_CASE("inclusion cutoff") {
        CHECK(frob_cutoff(1.0, 1.0) == Approx(3.0).epsilon(1e-14));
        CHECK(frob_cutoff(4.0, 1.0) == Approx(0.625 + std::sqrt(1.140625)).epsilon(1e-14));
        for (const double g : {0.1, 0.5, 1.0, 4.0, 9.0}) {
            CHECK(std::abs(frob_alpha(frob_cutoff(g, 1.0), g, 1.0) - 1.0) <= 1e-10);
            CHECK(frob_cutoff(g, 2.5) == Approx(2.5 * frob_cutoff(g, 1.0)).epsilon(1e-14));
        }
    }

    TEST_CASE("loss limit curves") {
        const SpikedModel one(1.0, 1.0, {4.0});
        const LossLimitCurve c = loss_limit_curves(one, 3);
        CHECK(c.frob_limit[0] == Approx(4.0));
        CHECK(c.frob_limit[1] == Approx(2.75));
        CHECK(c.frob_limit[2] > c.frob_limit[1]);

        const SpikedModel many(1.0, 1.0, {12.0, 6.0, 3.0, 1.5, 0.75});
        const LossLimitCurve m = loss_limit_curves(many, 7);
        CHECK(m.frob_limit[0] == Approx(23.25));
        REQUIRE(m.frob_limit.size() == 8);
        REQUIRE(m.spec_limit.size() == 8);
        CHECK(m.frob_limit[3] == Approx(m.frob_limit[2]).epsilon(1e-12));
    }

    TEST_CASE("spectral norm from trace and determinant matches a 2x2 eigensolve") {
        CounterRng rng(RngSeed{17, 0});
        for (int t = 0; t < 50; ++t) {
            Matrix f(2, 2);
            f << rng.normal(), rng.normal(), rng.normal(), rng.normal();
            const Matrix g = f.transpose() * f;
            const Eigen::SelfAdjointEigenSolver<Matrix> es(g);
            CHECK(spectral_from_trace_det(g.trace(), g.determinant()) ==
                  Approx(es.eigenvalues()(1)).epsilon(1e-10));
        }
    }
}

TEST_SUITE("shrinkage") {
    TEST_CASE("values") {
        CHECK(shrink(2.0, 1.0, 1.0) == 0.0);
        CHECK(shrink(1.0, 1.0, 1.0) == 0.0);
        CHECK(shrink(2.5, 1.0, 1.0) == Approx(1.5));
        CHECK(shrink(2.0 + 1e-6, 1.0, 1.0) <= 1e-2);
        const SpikedLimits lim = spiked_limits(SpikedModel(1.0, 1.0, {4.0}));
        CHECK(shrink(2.5, 1.0, 1.0) ==
              Approx(2.0 * std::sqrt(lim.factors[0].theta2 * lim.factors[0].phi2)));
    }
}

TEST_SUITE("secular equation") {
    TEST_CASE("limiting roots") {
        const SpikedModel one(1.0, 1.0, {4.0});
        CHECK(std::abs(secular_t0(6.25, one)(0)) <= 1e-10);
        for (const double z : {7.0, 10.0, 100.0}) {
            CHECK(secular_t0(z, one)(0) < 0.0);
        }
        const SpikedModel two(1.0, 1.0, {4.0, 2.0});
        CHECK(std::abs(secular_t0(6.25, two)(0)) <= 1e-10);
        CHECK(std::abs(secular_t0(4.5, two)(1)) <= 1e-10);
    }

    TEST_CASE("block-diagonal case") {
        Matrix s = Matrix::Zero(3, 3);
        s.diagonal() << 5.0, 1.0, 1.0;
        const Matrix t = secular_tn(5.0, GramBlocks::split(s, 1));
        CHECK(std::abs(t(0, 0)) < 1e-14);
    }

    TEST_CASE("eigenvalues are roots") {
        CounterRng rng(RngSeed{23, 0});
        for (int t = 0; t < 10; ++t) {
            Matrix a(6, 6);
            for (Index i = 0; i < 36; ++i) {
                a(i) = rng.normal();
            }
            const Matrix s = a.transpose() * a;
            const Eigen::SelfAdjointEigenSolver<Matrix> es(s);
            const double top = es.eigenvalues()(5);
            const double norm = top;
            CHECK(std::abs(secular_tn(top, GramBlocks::split(s, 2)).determinant()) <= 1e-8 * norm);
        }
    }

    TEST_CASE("pole detection") {
        Matrix s = Matrix::Zero(3, 3);
        s.diagonal() << 5.0, 2.0, 1.0;
        s(0, 1) = s(1, 0) = 0.5;
        CHECK_THROWS_AS(secular_tn(2.0, GramBlocks::split(s, 1)), SingularShift);
        CHECK_THROWS_AS(secular_tn(1.0 + 1e-13, GramBlocks::split(s, 1)), SingularShift);
        CHECK_NOTHROW(secular_tn(1.5, GramBlocks::split(s, 1)));
    }
}

TEST_SUITE("perturbation") {
    TEST_CASE("zero perturbation is exact") {
        Vector lambda(3);
        lambda << 3.0, 2.0, 1.0;
        const EigenPerturbation ep = perturb_eigs(lambda, Matrix::Zero(3, 3), 100.0);
        CHECK((ep.values - lambda).norm() == 0.0);
        CHECK(ep.vectors.isIdentity(0.0));
    }

    TEST_CASE("2x2 closed form") {
        Vector lambda(2);
        lambda << 3.0, 1.0;
        const Matrix h = from_rows({{0, 1}, {1, 0}});
        const double n = 1e4;
        const EigenPerturbation ep = perturb_eigs(lambda, h, n);
        CHECK(ep.vectors(0, 1) == Approx(-0.005));
        Matrix exact = lambda.asDiagonal();
        exact += h / std::sqrt(n);
        const Eigen::SelfAdjointEigenSolver<Matrix> es(exact);
        Vector top = es.eigenvectors().col(1);
        top /= top(0);
        Vector bottom = es.eigenvectors().col(0);
        bottom /= bottom(1);
        CHECK(std::abs(top(1) - ep.vectors(1, 0)) <= 1e-6);
        CHECK(std::abs(bottom(0) - ep.vectors(0, 1)) <= 1e-6);
    }

    TEST_CASE("eigenvalue prediction error is second order") {
        CounterRng rng(RngSeed{29, 0});
        Vector lambda(4);
        lambda << 4.0, 3.0, 2.0, 1.0;
        for (const double n : {1e4, 1e6}) {
            const Matrix h = random_symmetric(4, rng);
            const EigenPerturbation ep = perturb_eigs(lambda, h, n);
            Matrix exact = lambda.asDiagonal();
            exact += h / std::sqrt(n);
            const Eigen::SelfAdjointEigenSolver<Matrix> es(exact);
            for (Index i = 0; i < 4; ++i) {
                double second = 0.0;
                for (Index j = 0; j < 4; ++j) {
                    if (j != i) {
                        second += h(i, j) * h(i, j) / std::abs(lambda(i) - lambda(j));
                    }
                }
                const double err = std::abs(es.eigenvalues()(3 - i) - ep.values(i));
                CHECK(err <= 1.5 * second / n + 1e-12);
            }
        }
    }
}

TEST_SUITE("bcv planning") {
    TEST_CASE("held-in fraction and beta crossover") {
        const BcvPlan plan = bcv_bias(SpikedModel(1.0, 1.0, {4.0}), 2.0, 2.0);
        CHECK(plan.rho == Approx(0.25));
        CHECK(plan.gamma1 == Approx(1.0));
        double lo = 1.01;
        double hi = 20.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double beta = bcv_bias(SpikedModel(1.0, 1.0, {mid}), 2.0, 2.0).betas[0];
            (beta > 1.0 ? lo : hi) = mid;
        }
        CHECK(lo == Approx(std::sqrt(8.0)).epsilon(1e-9));
    }

    TEST_CASE("beta decays like the leading term") {
        const double mu = 1e6;
        const BcvPlan plan = bcv_bias(SpikedModel(1.0, 1.0, {mu}), 3.0, 4.0);
        const double lead = (2.0 / 3.0 + 3.0 / 4.0) * (1.0 / mu) / plan.rho;
        CHECK(plan.betas[0] == Approx(lead).epsilon(1e-4));
    }

    TEST_CASE("eta limit for many folds") {
        const BcvPlan plan = bcv_bias(SpikedModel(1.0, 1.0, {4.0}), 1e6, 1e6);
        CHECK(std::abs(plan.eta - 0.25) <= 1e-5);
    }

    TEST_CASE("optimal plan") {
        const BcvFoldPlan plan = bcv_plan(1.0);
        CHECK(plan.rho_star == Approx(2.0 / 9.0).epsilon(1e-14));
        CHECK(plan.k_sym == Approx(1.8918).epsilon(1e-4));
        CHECK(std::sqrt(2.0 / plan.rho_star) == Approx(frob_cutoff(1.0, 1.0)));
        for (const double g : {0.1, 0.5, 2.0, 7.0}) {
            CHECK(bcv_plan(g).rho_star == Approx(bcv_plan(1.0 / g).rho_star).epsilon(1e-12));
        }
    }

    TEST_CASE("alternative general fold count disagrees with the symmetric solution") {
        CHECK(bcv_plan_alt_general(1.0) == Approx(3.0));
        CHECK(bcv_plan(1.0).k_sym < 2.0);
    }
}
