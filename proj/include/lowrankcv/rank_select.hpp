#ifndef LOWRANKCV_RANK_SELECT_HPP
#define LOWRANKCV_RANK_SELECT_HPP

#include <string>
#include <vector>

#include "lowrankcv/matrix_core.hpp"
#include "lowrankcv/random_factors.hpp"

namespace lowrankcv {

struct RankDecision {
    Index chosen_k = 0;
    std::vector<double> values;
    std::string method;
};

/// Smallest index attaining the minimum; NaN entries never win.
RankDecision pick_rank(const std::vector<double>& criterion, std::string method = {});

// Losses of the truncated SVD X_hat(k) of sample.x against the known signal,
// all normalized by n*p, for k = 0..k_max.

/// ME(k) = ||signal - X_hat(k)||^2 / (np).
std::vector<double> true_me(const FactorSample& sample, Index k_max);

/// PE(k) = ||signal + E' - X_hat(k)||^2 / (np) for one fresh noise draw E'
/// of the same kind as the sample's noise.
std::vector<double> true_pe(const FactorSample& sample, Index k_max, RngSeed fresh_noise);

/// ME(k) + sigma2: the expectation of true_pe over the fresh noise.
std::vector<double> expected_pe(const FactorSample& sample, Index k_max);

/// Squared spectral-norm loss ||signal - X_hat(k)||_2^2 / n.
std::vector<double> spectral_loss(const FactorSample& sample, Index k_max);

struct BicCurves {
    std::vector<double> bic1;
    std::vector<double> bic2;
    std::vector<double> bic3;
};

/// log RSS(k) plus the three rank penalties with C = min(sqrt n, sqrt p);
/// RSS is floored at 1e-300 before the log. Needs k_max < min(n, p).
BicCurves bic_curves(const Matrix& x, Index k_max);

/// Squared singular values normalized to sum to 1.
std::vector<double> scree(const Matrix& x);

/// Rank-k SVD with each d_i replaced by sqrt(n) * shrink(d_i / sqrt(n)).
Matrix shrunk_truncate(const Matrix& x, Index k, double gamma, double sigma2);

/// CSV with columns k, bic1, bic2, bic3, scree for k = 0..k_max.
std::string criterion_csv(const Matrix& x, Index k_max);

}  // namespace lowrankcv

#endif  // LOWRANKCV_RANK_SELECT_HPP
