#ifndef LOWRANKCV_CV_ENGINE_HPP
#define LOWRANKCV_CV_ENGINE_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "lowrankcv/matrix_core.hpp"
#include "lowrankcv/missing_svd.hpp"
#include "lowrankcv/random.hpp"

/**
 * @file cv_engine.hpp
 * @brief Hold-out plans and cross-validated prediction error curves for
 * choosing the rank of a truncated SVD.
 */

namespace lowrankcv {

/// Speckled hold-out: K disjoint cell sets that together cover the matrix.
struct WoldPlan {
    Index rows = 0;
    Index cols = 0;
    std::vector<IndexSet> folds;
};

/// Blocked hold-out: K row groups crossed with L column groups.
struct GabrielPlan {
    struct Fold {
        std::size_t row_group = 0;
        std::size_t col_group = 0;
    };

    Index rows = 0;
    Index cols = 0;
    std::vector<std::vector<Index>> row_groups;
    std::vector<std::vector<Index>> col_groups;
    std::vector<Index> row_perm;
    std::vector<Index> col_perm;

    /// All K*L (row group, column group) pairs, row group major.
    std::vector<Fold> folds() const;
};

using HoldoutPlan = std::variant<WoldPlan, GabrielPlan>;

/// Bits of CvCurve::rank_flags.
enum CvFlag : std::uint32_t {
    kEmNotConverged = 1u << 0,  ///< EM hit max_iter on at least one fold
    kDegenerateFold = 1u << 1,  ///< at least one fold excluded from the mean
};

/**
 * Per-rank cross-validation estimate. `pe_folds(f, k)` is the value of fold
 * f at rank k; +inf marks a fold that could not be evaluated, which is left
 * out of `pe_mean` and `se`.
 */
struct CvCurve {
    std::vector<Index> ranks;
    std::vector<double> pe_mean;
    std::vector<double> se;  ///< sample sd across folds / sqrt(#folds)
    Matrix pe_folds;
    std::vector<std::uint32_t> rank_flags;
    Index excluded = 0;  ///< number of (fold, rank) values left out

    Index argmin() const;  ///< smallest rank attaining the minimum pe_mean
};

/// Uniformly random K-fold partition of the cells; sizes differ by at most 1.
WoldPlan wold_plan(Index n, Index p, Index k_folds, RngSeed seed);

/// Random K row groups and L column groups of near-equal sizes.
GabrielPlan gabriel_plan(Index n, Index p, Index k_folds, Index l_folds, RngSeed seed);

/**
 * Speckled cross-validation. For each fold the held-in cells are fitted by
 * em_svd at ranks 1..k_max (warm-started from the rank k-1 completion) and
 * the fold value is the mean squared error on the held-out cells. Rank 0
 * predicts each cell by the held-in mean of its column. Unobserved cells of
 * `x` are excluded from both sides.
 */
CvCurve wold_pe(const MaskedMatrix& x, const WoldPlan& plan, Index k_max,
                const EmOptions& em = {}, unsigned threads = 1);
CvCurve wold_pe(const Matrix& x, const WoldPlan& plan, Index k_max, const EmOptions& em = {},
                unsigned threads = 1);

/// X22_hat = X21 * pinv(X11 truncated to k) * X12; k = 0 gives zeros.
Matrix gabriel_predict(const Matrix& x11, const Matrix& x12, const Matrix& x21, Index k);

/// Blocked cross-validation, fold value ||X22 - X22_hat||^2 / (n2 p2).
CvCurve gabriel_pe(const Matrix& x, const GabrielPlan& plan, Index k_max, unsigned threads = 1);

struct RotatedMatrix {
    Matrix x;             ///< P X Q^T
    Matrix row_rotation;  ///< P, n x n
    Matrix col_rotation;  ///< Q, p x p
};

/// Random orthogonal rotation of rows and columns.
RotatedMatrix rotated(const Matrix& x, RngSeed seed);

/**
 * Ordinary hold-out of whole rows: fit V from the training rows and predict
 * the test rows by X2 V_k V_k^T. The curve can only decrease in k, which is
 * why this scheme cannot select a rank.
 */
CvCurve naive_rowwise_pe(const Matrix& x, const std::vector<Index>& test_rows, Index k_max);

/// ||X - X_hat(k)||_F^2 / ((n - k)(p - k)). Throws DomainError for k >= min(n, p).
double estimate_sigma2(const Matrix& x, Index k_hint);

/// Model-error curve: `pe` shifted down by `sigma2_hat`.
CvCurve me_curve(const CvCurve& pe, double sigma2_hat);

/// CSV with columns k, pe_mean, se, fold_0..fold_{F-1}, flags.
std::string curve_csv(const CvCurve& curve);

}  // namespace lowrankcv

#endif  // LOWRANKCV_CV_ENGINE_HPP
