#ifndef LOWRANKCV_MISSING_SVD_HPP
#define LOWRANKCV_MISSING_SVD_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lowrankcv/matrix_core.hpp"

namespace lowrankcv {

/**
 * Matrix values plus the set of observed cells. Unobserved cells hold NaN and
 * are never read by the norms below.
 */
class MaskedMatrix {
public:
    /// Throws NoData if `observed` is empty, InvalidMatrix if an observed
    /// value is not finite, ShapeError on mismatched shapes.
    MaskedMatrix(Matrix values, IndexSet observed);

    /// Wraps a complete matrix.
    static MaskedMatrix complete(const Matrix& values);

    Index rows() const { return values_.rows(); }
    Index cols() const { return values_.cols(); }
    const Matrix& values() const { return values_; }
    const IndexSet& observed() const { return observed_; }
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask() const { return mask_; }
    bool is_observed(Index i, Index j) const { return mask_(i, j); }
    bool fully_observed() const {
        return static_cast<Index>(observed_.size()) == rows() * cols();
    }

    /// Per-column mean of the observed values; 0 for an all-missing column.
    Vector column_means() const;

    /// Observed values with unobserved cells replaced by `fill`.
    Matrix filled_with(const Matrix& fill) const;

private:
    Matrix values_;
    IndexSet observed_;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask_;
};

struct EmOptions {
    double tol = 1e-4;
    int max_iter = 500;
    /// Optional starting values for the unobserved cells (warm start). When
    /// absent, unobserved cells start at their column means.
    std::optional<Matrix> initial_fill;
};

struct EmResult {
    Matrix completion;  ///< rank <= k approximation A'_k
    Matrix working;     ///< final filled matrix; observed cells equal the input
    std::vector<double> rss_trace;
    int iterations = 0;
    bool converged = false;
};

/**
 * Rank-k SVD approximation of a matrix with missing values by EM.
 *
 * Starts from column-mean imputation, then alternates a rank-k truncation of
 * the filled matrix (M-step) with overwriting the unobserved cells by that
 * truncation (E-step). Stops when the change in observed-cell RSS relative to
 * the first RSS (floored at 1e-12) is at most `tol`. Hitting `max_iter`
 * returns with `converged == false`.
 */
EmResult em_svd(const MaskedMatrix& a, Index k, const EmOptions& options = {});

/// Runs em_svd from several perturbed starting fills and keeps the lowest
/// final RSS. Seed 0 of the list is the plain column-mean start.
EmResult em_svd_multistart(const MaskedMatrix& a, Index k, const EmOptions& options,
                           std::span<const std::uint64_t> seeds);

/// Rank-k factors (U_k, d_k, V_k) of the EM completion.
SvdFactorization svd_with_missing(const MaskedMatrix& a, Index k, const EmOptions& options = {});

/// Rank-k approximation of a complete matrix; the M-step of em_svd.
Matrix rank_k_approx(const Matrix& a, Index k);

}  // namespace lowrankcv

#endif  // LOWRANKCV_MISSING_SVD_HPP
