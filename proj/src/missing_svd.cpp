#include "lowrankcv/missing_svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lowrankcv/random.hpp"

namespace lowrankcv {

MaskedMatrix::MaskedMatrix(Matrix values, IndexSet observed)
    : values_(std::move(values)), observed_(std::move(observed)) {
    if (observed_.empty()) {
        throw NoData("masked matrix has no observed entries");
    }
    if (observed_.rows() != values_.rows() || observed_.cols() != values_.cols()) {
        throw ShapeError("observed index set shape differs from values");
    }
    mask_ = observed_.mask();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Index j = 0; j < values_.cols(); ++j) {
        for (Index i = 0; i < values_.rows(); ++i) {
            if (!mask_(i, j)) {
                values_(i, j) = nan;
            } else if (!std::isfinite(values_(i, j))) {
                throw InvalidMatrix("observed entry is not finite");
            }
        }
    }
}

MaskedMatrix MaskedMatrix::complete(const Matrix& values) {
    return MaskedMatrix(values, IndexSet::all(values.rows(), values.cols()));
}

Vector MaskedMatrix::column_means() const {
    Vector means = Vector::Zero(cols());
    for (Index j = 0; j < cols(); ++j) {
        double sum = 0.0;
        Index count = 0;
        for (Index i = 0; i < rows(); ++i) {
            if (mask_(i, j)) {
                sum += values_(i, j);
                ++count;
            }
        }
        means(j) = count > 0 ? sum / static_cast<double>(count) : 0.0;
    }
    return means;
}

Matrix MaskedMatrix::filled_with(const Matrix& fill) const {
    if (fill.rows() != rows() || fill.cols() != cols()) {
        throw ShapeError("fill shape differs from masked matrix");
    }
    return mask_.select(values_, fill);
}

Matrix rank_k_approx(const Matrix& a, Index k) {
    const Index r = std::min(a.rows(), a.cols());
    if (k < 0 || k > r) {
        throw RankOutOfRange("rank_k_approx: k=" + std::to_string(k) + " outside [0, " +
                             std::to_string(r) + "]");
    }
    if (k == 0) {
        return Matrix::Zero(a.rows(), a.cols());
    }
    if (k == r) {
        return a;
    }
    // Project onto the leading eigenvectors of the smaller Gram matrix.
    if (a.rows() >= a.cols()) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(a.transpose() * a);
        const Matrix v = es.eigenvectors().rightCols(k);
        return (a * v) * v.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(a * a.transpose());
    const Matrix u = es.eigenvectors().rightCols(k);
    return u * (u.transpose() * a);
}

namespace {

EmResult run_em(const MaskedMatrix& a, Index k, const EmOptions& options, Matrix start) {
    const Index r = std::min(a.rows(), a.cols());
    if (k < 0 || k > r) {
        throw RankOutOfRange("em_svd: k=" + std::to_string(k) + " outside [0, " +
                             std::to_string(r) + "]");
    }
    if (!(options.tol > 0.0)) {
        throw DomainError("em_svd: tol must be positive");
    }
    const auto& mask = a.mask();
    const Matrix& obs = a.values();
    const auto rss_of = [&](const Matrix& approx) {
        return mask.select(obs - approx, Matrix::Zero(obs.rows(), obs.cols())).squaredNorm();
    };

    EmResult res;
    res.working = std::move(start);
    if (a.fully_observed()) {
        res.completion = rank_k_approx(res.working, k);
        res.rss_trace.push_back(rss_of(res.completion));
        res.iterations = 1;
        res.converged = true;
        return res;
    }

    constexpr double floor = 1e-12;
    double rss0 = 0.0;
    for (int it = 0; it < options.max_iter; ++it) {
        // M-step
        res.completion = rank_k_approx(res.working, k);
        const double rss = rss_of(res.completion);
        res.rss_trace.push_back(rss);
        res.iterations = it + 1;
        // E-step
        res.working = mask.select(obs, res.completion);
        if (it == 0) {
            rss0 = rss;
            continue;
        }
        const double prev = res.rss_trace[res.rss_trace.size() - 2];
        if (std::abs(rss - prev) / std::max(rss0, floor) <= options.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace

EmResult em_svd(const MaskedMatrix& a, Index k, const EmOptions& options) {
    Matrix fill;
    if (options.initial_fill) {
        fill = *options.initial_fill;
    } else {
        fill = a.column_means().transpose().replicate(a.rows(), 1);
    }
    return run_em(a, k, options, a.filled_with(fill));
}

EmResult em_svd_multistart(const MaskedMatrix& a, Index k, const EmOptions& options,
                           std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) {
        return em_svd(a, k, options);
    }
    const Matrix base = a.column_means().transpose().replicate(a.rows(), 1);
    double scale = 0.0;
    for (const auto& c : a.observed()) {
        scale += a.values()(c.row, c.col) * a.values()(c.row, c.col);
    }
    scale = std::sqrt(scale / static_cast<double>(a.observed().size()));

    std::optional<EmResult> best;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        Matrix fill = base;
        if (s > 0) {
            CounterRng rng(RngSeed{seeds[s], 0});
            for (Index j = 0; j < fill.cols(); ++j) {
                for (Index i = 0; i < fill.rows(); ++i) {
                    fill(i, j) += scale * rng.normal();
                }
            }
        }
        EmResult res = run_em(a, k, options, a.filled_with(fill));
        if (!best || res.rss_trace.back() < best->rss_trace.back()) {
            best = std::move(res);
        }
    }
    return std::move(*best);
}

SvdFactorization svd_with_missing(const MaskedMatrix& a, Index k, const EmOptions& options) {
    const EmResult res = em_svd(a, k, options);
    SvdFactorization full = svd(res.completion);
    return {full.u.leftCols(k), full.d.head(k), full.v.leftCols(k)};
}

}  // namespace lowrankcv
