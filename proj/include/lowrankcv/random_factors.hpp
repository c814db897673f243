#ifndef LOWRANKCV_RANDOM_FACTORS_HPP
#define LOWRANKCV_RANDOM_FACTORS_HPP

#include <string>
#include <vector>

#include "lowrankcv/matrix_core.hpp"
#include "lowrankcv/random.hpp"

namespace lowrankcv {

/// Uniform (Haar) orthonormal k-frame in R^p: Gaussian draw, QR, first k
/// columns of Q, random column signs. Throws DomainError unless 1 <= k <= p.
Matrix sample_stiefel(Index p, Index k, CounterRng& rng);
Matrix sample_stiefel(Index p, Index k, RngSeed seed);

/// Uniform random n x n orthogonal matrix.
Matrix sample_rotation(Index n, RngSeed seed);

enum class FactorKind { gaussian, sparse, stiefel };

struct FactorSpec {
    FactorKind kind = FactorKind::gaussian;
    double sparsity = 0.1;       ///< fraction of nonzero entries for sparse factors
    bool orthonormalize = false; ///< QR the generated U and V afterwards

    static FactorSpec gaussian() { return {}; }
    static FactorSpec sparse(double s) { return {FactorKind::sparse, s, false}; }
    static FactorSpec stiefel() { return {FactorKind::stiefel, 0.1, false}; }
};

enum class NoiseKind { white, heavy, colored };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::white;
    double nu1 = 3.0;  ///< t degrees of freedom (heavy) or row inverse-chi2 dof (colored)
    double nu2 = 3.0;  ///< column inverse-chi2 dof (colored)

    static NoiseSpec white() { return {}; }
    static NoiseSpec heavy(double nu) { return {NoiseKind::heavy, nu, nu}; }
    static NoiseSpec colored(double nu1, double nu2) { return {NoiseKind::colored, nu1, nu2}; }
};

std::string to_string(FactorKind kind);
std::string to_string(NoiseKind kind);

struct FactorPair {
    Matrix u;  ///< n x k0
    Matrix v;  ///< p x k0
};

/**
 * Random factors with E[U^T U] = E[V^T V] = I.
 *
 * gaussian: U_ij ~ N(0, 1/n), V_ij ~ N(0, 1/p).
 * sparse(s): entries 0 with probability 1 - s, else +-1/sqrt(s n) (resp. p).
 * stiefel: exact Haar frames.
 */
FactorPair gen_factors(const FactorSpec& spec, Index n, Index p, Index k0, RngSeed seed);

/**
 * Unit-variance noise scaled to variance sigma2.
 *
 * white: N(0, 1). heavy: t_nu / sqrt(nu / (nu - 2)).
 * colored: N(0, s_i^2 + t_j^2) / c with s_i^2 ~ Inv-chi2(nu1), t_j^2 ~ Inv-chi2(nu2)
 * and c^2 = 1/(nu1 - 2) + 1/(nu2 - 2).
 * Throws DomainError for nu <= 2 or sigma2 < 0.
 */
Matrix gen_noise(const NoiseSpec& spec, Index n, Index p, double sigma2, RngSeed seed);

struct FactorSample {
    Matrix x;  ///< sqrt(n) U diag(d) V^T + E
    Matrix u;
    Vector d;
    Matrix v;
    Matrix e;
    FactorSpec factor;
    NoiseSpec noise;
    double sigma2 = 1.0;
    RngSeed seed;

    /// The signal part sqrt(n) U diag(d) V^T.
    Matrix signal() const;
};

/**
 * Draws one data matrix from the latent factor model. `strengths` are the
 * entries of D (nonincreasing, nonnegative); the factors use stream
 * seed.child(0) and the noise seed.child(1), so changing the noise kind never
 * changes the factors.
 */
FactorSample sample_model(Index n, Index p, const std::vector<double>& strengths,
                          const FactorSpec& factor, const NoiseSpec& noise, double sigma2,
                          RngSeed seed);

/**
 * Projects the p x k frame `u` onto a uniform random q-frame V and returns
 * q * sum_i (sigma_i(U~) - 1)^2 with U~ = sqrt(p/q) V^T u, which is the
 * squared norm of the scaled distance from U~ to its nearest k-frame.
 */
double frame_projection_defect(const Matrix& u, Index q, RngSeed seed);

}  // namespace lowrankcv

#endif  // LOWRANKCV_RANDOM_FACTORS_HPP
