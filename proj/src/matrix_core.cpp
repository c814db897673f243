#include "lowrankcv/matrix_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace lowrankcv {

void require_finite(const Matrix& a) {
    if (a.size() == 0) {
        throw InvalidMatrix("matrix is empty");
    }
    if (!a.allFinite()) {
        throw InvalidMatrix("matrix has non-finite entries");
    }
}

IndexSet::IndexSet(Index rows, Index cols, std::vector<Cell> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells)) {
    if (rows < 0 || cols < 0) {
        throw ShapeError("negative index set shape");
    }
    std::sort(cells_.begin(), cells_.end());
    if (std::adjacent_find(cells_.begin(), cells_.end()) != cells_.end()) {
        throw ShapeError("index set has duplicate cells");
    }
    for (const auto& c : cells_) {
        if (c.row < 0 || c.row >= rows || c.col < 0 || c.col >= cols) {
            throw ShapeError("cell (" + std::to_string(c.row) + "," +
                             std::to_string(c.col) + ") out of bounds");
        }
    }
}

IndexSet IndexSet::all(Index rows, Index cols) {
    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(rows * cols));
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            cells.push_back({i, j});
        }
    }
    return IndexSet(rows, cols, std::move(cells));
}

bool IndexSet::contains(Cell c) const {
    return std::binary_search(cells_.begin(), cells_.end(), c);
}

IndexSet IndexSet::complement() const {
    std::vector<Cell> out;
    out.reserve(static_cast<std::size_t>(rows_ * cols_) - cells_.size());
    auto it = cells_.begin();
    for (Index i = 0; i < rows_; ++i) {
        for (Index j = 0; j < cols_; ++j) {
            const Cell c{i, j};
            if (it != cells_.end() && *it == c) {
                ++it;
            } else {
                out.push_back(c);
            }
        }
    }
    return IndexSet(rows_, cols_, std::move(out));
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> IndexSet::mask() const {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> m =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rows_, cols_, false);
    for (const auto& c : cells_) {
        m(c.row, c.col) = true;
    }
    return m;
}

namespace {

// Largest-magnitude entry of every v column positive, then order exact ties in
// d by the lexicographic order of the sign-fixed v columns.
void canonicalize(SvdFactorization& f) {
    const Index r = f.d.size();
    for (Index j = 0; j < r; ++j) {
        Index best = 0;
        double best_abs = -1.0;
        for (Index i = 0; i < f.v.rows(); ++i) {
            const double a = std::abs(f.v(i, j));
            if (a > best_abs) {
                best_abs = a;
                best = i;
            }
        }
        if (f.v.rows() > 0 && f.v(best, j) < 0.0) {
            f.v.col(j) *= -1.0;
            f.u.col(j) *= -1.0;
        }
    }

    std::vector<Index> order(static_cast<std::size_t>(r));
    std::iota(order.begin(), order.end(), Index{0});
    const auto v_less = [&](Index a, Index b) {
        for (Index i = 0; i < f.v.rows(); ++i) {
            if (f.v(i, a) != f.v(i, b)) {
                return f.v(i, a) < f.v(i, b);
            }
        }
        return a < b;
    };
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        if (f.d(a) != f.d(b)) {
            return f.d(a) > f.d(b);
        }
        return v_less(a, b);
    });
    if (!std::is_sorted(order.begin(), order.end())) {
        SvdFactorization g{Matrix(f.u.rows(), r), Vector(r), Matrix(f.v.rows(), r)};
        for (Index j = 0; j < r; ++j) {
            const Index src = order[static_cast<std::size_t>(j)];
            g.u.col(j) = f.u.col(src);
            g.v.col(j) = f.v.col(src);
            g.d(j) = f.d(src);
        }
        f = std::move(g);
    }
}

// Extends the first `filled` orthonormal columns of q to a full orthonormal
// set by Gram-Schmidt against the canonical basis.
void complete_orthonormal(Matrix& q, Index filled) {
    Index next = filled;
    for (Index e = 0; e < q.rows() && next < q.cols(); ++e) {
        Vector c = Vector::Unit(q.rows(), e);
        for (int pass = 0; pass < 2; ++pass) {
            c -= q.leftCols(next) * (q.leftCols(next).transpose() * c);
        }
        const double norm = c.norm();
        if (norm > 1e-8) {
            q.col(next++) = c / norm;
        }
    }
}

}  // namespace

SvdFactorization svd(const Matrix& a) {
    require_finite(a);
    Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdFactorization f{dec.matrixU(), dec.singularValues(), dec.matrixV()};
    canonicalize(f);
    return f;
}

SvdFactorization leading_svd(const Matrix& a, Index k) {
    require_finite(a);
    const Index n = a.rows();
    const Index p = a.cols();
    const Index r = std::min(n, p);
    if (k < 0 || k > r) {
        throw RankOutOfRange("leading_svd: k=" + std::to_string(k) + " exceeds rank bound " +
                             std::to_string(r));
    }
    SvdFactorization f{Matrix(n, k), Vector(k), Matrix(p, k)};
    if (k == 0) {
        return f;
    }
    const bool tall = n >= p;
    const Matrix gram = tall ? Matrix(a.transpose() * a) : Matrix(a * a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const Index m = gram.rows();
    // Eigen sorts eigenvalues ascending.
    Matrix side = es.eigenvectors().rightCols(k).rowwise().reverse();
    Vector lam = es.eigenvalues().tail(k).reverse();
    Matrix other = tall ? Matrix(a * side) : Matrix(a.transpose() * side);
    const double cutoff = std::sqrt(std::max(lam(0), 0.0)) * 1e-13 * static_cast<double>(m);
    Index good = 0;
    for (Index j = 0; j < k; ++j) {
        // Recompute singular values from the product; more accurate than sqrt(lambda).
        const double s = other.col(j).norm();
        f.d(j) = s;
        if (s > cutoff && good == j) {
            other.col(j) /= s;
            ++good;
        }
    }
    if (good < k) {
        f.d.tail(k - good).setZero();
        complete_orthonormal(other, good);
    }
    if (tall) {
        f.v = side;
        f.u = other;
    } else {
        f.u = side;
        f.v = other;
    }
    canonicalize(f);
    return f;
}

Matrix truncate(const SvdFactorization& f, Index k, double scale) {
    if (k < 0 || k > f.rank()) {
        throw RankOutOfRange("truncate: k=" + std::to_string(k) + " outside [0, " +
                             std::to_string(f.rank()) + "]");
    }
    if (k == 0) {
        return Matrix::Zero(f.rows(), f.cols());
    }
    return scale * (f.u.leftCols(k) * f.d.head(k).asDiagonal() * f.v.leftCols(k).transpose());
}

double masked_frob_sq(const Matrix& a, const Matrix& b, const IndexSet& cells) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError("masked_frob_sq: operand shapes differ");
    }
    if (!cells.empty() && (cells.rows() != a.rows() || cells.cols() != a.cols())) {
        throw ShapeError("masked_frob_sq: index set shape differs from operands");
    }
    double sum = 0.0;
    for (const auto& c : cells) {
        const double diff = a(c.row, c.col) - b(c.row, c.col);
        sum += diff * diff;
    }
    return sum;
}

Matrix pinv_truncated(const SvdFactorization& f, Index k, double eps) {
    if (k < 0 || k > f.rank()) {
        throw RankOutOfRange("pinv_truncated: k=" + std::to_string(k) + " outside [0, " +
                             std::to_string(f.rank()) + "]");
    }
    if (k == 0) {
        return Matrix::Zero(f.cols(), f.rows());
    }
    const double cutoff = eps < 0.0 ? 1e-12 * f.d(0) : eps;
    Vector inv(k);
    for (Index i = 0; i < k; ++i) {
        inv(i) = f.d(i) > cutoff ? 1.0 / f.d(i) : 0.0;
    }
    return f.v.leftCols(k) * inv.asDiagonal() * f.u.leftCols(k).transpose();
}

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const Index n = static_cast<Index>(rows.size());
    const Index p = n == 0 ? 0 : static_cast<Index>(rows.begin()->size());
    Matrix m(n, p);
    Index i = 0;
    for (const auto& row : rows) {
        if (static_cast<Index>(row.size()) != p) {
            throw ShapeError("from_rows: ragged rows");
        }
        Index j = 0;
        for (double x : row) {
            m(i, j++) = x;
        }
        ++i;
    }
    return m;
}

}  // namespace lowrankcv
