#ifndef LOWRANKCV_RMT_ORACLE_HPP
#define LOWRANKCV_RMT_ORACLE_HPP

#include <functional>
#include <utility>
#include <vector>

#include "lowrankcv/matrix_core.hpp"

/**
 * @file rmt_oracle.hpp
 * @brief Closed-form asymptotics for the SVD of low-rank-plus-noise matrices.
 *
 * Conventions: the data matrix is `X = sqrt(n) U D V^T + E` with
 * `D = diag(sqrt(mu_i))`, noise variance `sigma2`, and aspect ratio
 * `gamma = n / p`. Sample strengths are the eigenvalues of `X^T X / n`.
 */

namespace lowrankcv {

/// Population description of the spiked latent factor model.
class SpikedModel {
public:
    /// Throws DomainError unless gamma, sigma2 > 0 and mus strictly decreasing
    /// and positive. An empty `mus` describes pure noise.
    SpikedModel(double gamma, double sigma2, std::vector<double> mus);

    double gamma() const { return gamma_; }
    double sigma2() const { return sigma2_; }
    const std::vector<double>& mus() const { return mus_; }
    std::size_t factors() const { return mus_.size(); }

    /// Detection threshold sigma2 / sqrt(gamma).
    double detection_threshold() const;
    /// Upper edge of the scaled noise bulk, sigma2 (1 + gamma^{-1/2})^2.
    double bulk_edge() const;

private:
    double gamma_;
    double sigma2_;
    std::vector<double> mus_;
};

struct FactorLimit {
    double mu_bar = 0.0;  ///< limit of the sample strength
    double theta2 = 0.0;  ///< squared cosine, right factors
    double phi2 = 0.0;    ///< squared cosine, left factors
    bool above_threshold = false;
};

struct SpikedLimits {
    std::vector<FactorLimit> factors;
    double bulk_edge = 0.0;
};

struct LossLimitCurve {
    std::vector<double> frob_limit;  ///< index k = 0..k_max, limit of p * ME(k)
    std::vector<double> spec_limit;  ///< limit of the scaled squared spectral loss
    std::vector<double> alpha;       ///< per factor
};

struct BcvPlan {
    double k_folds = 0.0;
    double l_folds = 0.0;
    double rho = 0.0;
    double gamma1 = 0.0;  ///< gamma*(K-1)/K + (L-1)/L
    double eta = 0.0;
    std::vector<double> betas;
};

struct BcvFoldPlan {
    double rho_star = 0.0;
    double k_sym = 0.0;
};

// Marchenko-Pastur law for the eigenvalues of E^T E / n, E n x p, sigma2 = 1.

/// (a, b) = ((1 - gamma^{-1/2})^2, (1 + gamma^{-1/2})^2).
std::pair<double, double> mp_edges(double gamma);
/// Density of the continuous part; zero outside [a, b].
double mp_pdf(double x, double gamma);
/// Distribution function, including the point mass 1 - gamma at 0 for gamma < 1.
double mp_cdf(double x, double gamma);

/// Stieltjes transform m(z) = int dF(t) / (t - z) for real z > b.
double stieltjes(double z, double gamma);
/// Inverse z(m) = -1/m + 1/(1 + m/gamma) on the range of stieltjes over (b, inf).
double stieltjes_inverse(double m, double gamma);

SpikedLimits spiked_limits(const SpikedModel& model);

/**
 * Covariance of the limiting normal law of sqrt(n)(mu_hat - mu_bar), given
 * the covariance `sigma_d` of sqrt(n)(d^2 - mu). Rows and columns of
 * below-threshold factors are zero.
 */
Matrix spiked_value_covariance(const SpikedModel& model, const Matrix& sigma_d);

/// Relative Frobenius penalty for keeping a factor of strength mu.
double frob_alpha(double mu, double gamma, double sigma2);
/// Inclusion threshold: alpha(mu) < 1 iff mu > frob_cutoff.
double frob_cutoff(double gamma, double sigma2);

/**
 * (trace, determinant) of F^T F for the 2x2 loss block of one factor of
 * strength `mu` (0 for a pure-noise direction). `kept` says whether the
 * truncated SVD includes that term.
 */
std::pair<double, double> loss_block_trace_det(double mu, bool kept, double gamma,
                                               double sigma2);
/// Largest eigenvalue of a symmetric 2x2 from its trace and determinant.
double spectral_from_trace_det(double trace, double det);

/// Limits of p*ME(k) (Frobenius) and the squared spectral loss, k = 0..k_max.
LossLimitCurve loss_limit_curves(const SpikedModel& model, std::size_t k_max);

/// Optimal singular value shrinker for normalized singular values d_hat.
double shrink(double d_hat, double gamma, double sigma2);

/// Diagonal of the limiting secular matrix T0(z), z above the bulk edge.
Vector secular_t0(double z, const SpikedModel& model);

/// Blocks of a symmetric matrix S split after the first k coordinates.
struct GramBlocks {
    Matrix s11, s12, s21, s22;
    static GramBlocks split(const Matrix& s, Index k);
};

/// T_n(z) = S11 - zI - S12 (S22 - zI)^{-1} S21. Throws SingularShift near a pole.
Matrix secular_tn(double z, const GramBlocks& blocks);

struct EigenPerturbation {
    Vector values;   ///< lambda_i + H_ii / sqrt(n)
    Matrix vectors;  ///< identity plus -H_ij / (sqrt(n) (lambda_i - lambda_j)) off-diagonal
};

/// First-order eigen-perturbation of diag(lambda) + H / sqrt(n).
EigenPerturbation perturb_eigs(const Vector& lambda, const Matrix& h, double n);

/// Expected BCV model-error bias for (K, L)-fold Gabriel hold-outs.
BcvPlan bcv_bias(const SpikedModel& model, double k_folds, double l_folds);

/// Held-in fraction rho* that matches the BCV and Frobenius thresholds, and the
/// symmetric fold count K = L solving (K-1)/K = sqrt(rho*).
BcvFoldPlan bcv_plan(double gamma);

/**
 * Alternative general-aspect-ratio fold count K = 3 / (3 - 2(sqrt(gbar+3) - sqrt(gbar))).
 *
 * Warning: at gamma = 1 this gives K = 3, which does not satisfy
 * (K-1)/K = sqrt(rho*) (the solution there is K ~ 1.89). Kept for comparison
 * only; nothing in the library uses it.
 */
double bcv_plan_alt_general(double gamma);

/// Adaptive Gauss-Kronrod quadrature on [a, b] to relative tolerance `tol`.
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-10);

}  // namespace lowrankcv

#endif  // LOWRANKCV_RMT_ORACLE_HPP
