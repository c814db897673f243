#ifndef LOWRANKCV_MATRIX_CORE_HPP
#define LOWRANKCV_MATRIX_CORE_HPP

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

#include "lowrankcv/errors.hpp"

/**
 * @file matrix_core.hpp
 * @brief Dense linear algebra primitives: SVD, truncation, masked norms and
 * truncated pseudo-inverses.
 */

namespace lowrankcv {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Throws InvalidMatrix if `a` is empty or carries NaN/Inf.
void require_finite(const Matrix& a);

/// A (row, col) position inside a matrix.
struct Cell {
    Index row = 0;
    Index col = 0;
    auto operator<=>(const Cell&) const = default;
};

/**
 * Sorted, duplicate-free set of cells that all lie inside an `rows x cols`
 * matrix. Construction sorts and validates the input.
 */
class IndexSet {
public:
    IndexSet() = default;
    IndexSet(Index rows, Index cols, std::vector<Cell> cells);

    /// Every cell of an `rows x cols` matrix, in row-major order.
    static IndexSet all(Index rows, Index cols);

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    std::size_t size() const { return cells_.size(); }
    bool empty() const { return cells_.empty(); }
    bool contains(Cell c) const;

    const std::vector<Cell>& cells() const { return cells_; }
    auto begin() const { return cells_.begin(); }
    auto end() const { return cells_.end(); }

    /// Cells of the same shape that are not in this set.
    IndexSet complement() const;

    /// Dense 0/1 indicator with this set's shape.
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask() const;

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<Cell> cells_;
};

/**
 * Thin SVD `a = u * diag(d) * v^T` with r = min(n, p) terms.
 *
 * Singular values are nonincreasing. Each column of `v` has its
 * largest-magnitude entry positive (first such index on ties); the matching
 * column of `u` is flipped with it.
 */
struct SvdFactorization {
    Matrix u;
    Vector d;
    Matrix v;

    Index rank() const { return d.size(); }
    Index rows() const { return u.rows(); }
    Index cols() const { return v.rows(); }
};

/// Full thin SVD with the sign convention above. Throws InvalidMatrix.
SvdFactorization svd(const Matrix& a);

/**
 * Leading `k` singular triplets, computed from the eigendecomposition of the
 * smaller Gram matrix. Faster than svd() for small k; accurate for the
 * leading terms only. Same sign convention.
 */
SvdFactorization leading_svd(const Matrix& a, Index k);

/// `scale * U diag(d_1..d_k, 0, ...) V^T`. Throws RankOutOfRange for k > r.
Matrix truncate(const SvdFactorization& f, Index k, double scale = 1.0);

/// Sum over `cells` of (a - b)^2. Throws ShapeError on mismatched shapes.
double masked_frob_sq(const Matrix& a, const Matrix& b, const IndexSet& cells);

/**
 * Moore-Penrose inverse of the rank-k truncation:
 * `V diag(1/d_1..1/d_k, 0, ...) U^T`, with singular values `<= eps` mapped to
 * zero. A negative `eps` selects the default cutoff `1e-12 * d_1`.
 */
Matrix pinv_truncated(const SvdFactorization& f, Index k, double eps = -1.0);

/// Builds a matrix from nested row lists; handy for small fixtures.
Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

}  // namespace lowrankcv

#endif  // LOWRANKCV_MATRIX_CORE_HPP
