#include "lowrankcv/cv_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lowrankcv/matrix_io.hpp"
#include "lowrankcv/parallel.hpp"
#include "lowrankcv/random_factors.hpp"

namespace lowrankcv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Index> permutation(Index n, CounterRng& rng) {
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return perm;
}

std::vector<std::vector<Index>> deal(const std::vector<Index>& perm, Index groups) {
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(groups));
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out[i % out.size()].push_back(perm[i]);
    }
    for (auto& g : out) {
        std::sort(g.begin(), g.end());
    }
    return out;
}

// Fills pe_mean / se / excluded from pe_folds and the per-fold flag matrix.
void summarise(CvCurve& c) {
    const Index folds = c.pe_folds.rows();
    const Index ranks = c.pe_folds.cols();
    c.pe_mean.assign(static_cast<std::size_t>(ranks), kInf);
    c.se.assign(static_cast<std::size_t>(ranks), 0.0);
    c.excluded = 0;
    for (Index k = 0; k < ranks; ++k) {
        double sum = 0.0;
        Index m = 0;
        for (Index f = 0; f < folds; ++f) {
            const double v = c.pe_folds(f, k);
            if (std::isfinite(v)) {
                sum += v;
                ++m;
            } else {
                ++c.excluded;
                c.rank_flags[static_cast<std::size_t>(k)] |= kDegenerateFold;
            }
        }
        if (m == 0) {
            continue;
        }
        const double mean = sum / static_cast<double>(m);
        c.pe_mean[static_cast<std::size_t>(k)] = mean;
        if (m > 1) {
            double ss = 0.0;
            for (Index f = 0; f < folds; ++f) {
                const double v = c.pe_folds(f, k);
                if (std::isfinite(v)) {
                    ss += (v - mean) * (v - mean);
                }
            }
            c.se[static_cast<std::size_t>(k)] =
                std::sqrt(ss / static_cast<double>(m - 1)) / std::sqrt(static_cast<double>(m));
        }
    }
}

CvCurve empty_curve(Index folds, Index k_max) {
    CvCurve c;
    c.ranks.resize(static_cast<std::size_t>(k_max + 1));
    std::iota(c.ranks.begin(), c.ranks.end(), Index{0});
    c.pe_folds = Matrix::Constant(folds, k_max + 1, kInf);
    c.rank_flags.assign(static_cast<std::size_t>(k_max + 1), 0u);
    return c;
}

void check_rank(Index k_max, Index limit, const char* who) {
    if (k_max < 0 || k_max > limit) {
        throw RankOutOfRange(std::string(who) + ": k_max=" + std::to_string(k_max) +
                             " outside [0, " + std::to_string(limit) + "]");
    }
}

}  // namespace

Index CvCurve::argmin() const {
    Index best = 0;
    for (std::size_t k = 1; k < pe_mean.size(); ++k) {
        if (pe_mean[k] < pe_mean[static_cast<std::size_t>(best)]) {
            best = static_cast<Index>(k);
        }
    }
    return best;
}

std::vector<GabrielPlan::Fold> GabrielPlan::folds() const {
    std::vector<Fold> out;
    for (std::size_t i = 0; i < row_groups.size(); ++i) {
        for (std::size_t j = 0; j < col_groups.size(); ++j) {
            out.push_back({i, j});
        }
    }
    return out;
}

WoldPlan wold_plan(Index n, Index p, Index k_folds, RngSeed seed) {
    if (n < 1 || p < 1) {
        throw DomainError("wold_plan: empty matrix");
    }
    if (k_folds < 2 || k_folds > n * p) {
        throw DomainError("wold_plan: need 2 <= K <= n*p");
    }
    CounterRng rng(seed);
    const std::vector<Index> perm = permutation(n * p, rng);
    std::vector<std::vector<Cell>> cells(static_cast<std::size_t>(k_folds));
    for (std::size_t t = 0; t < perm.size(); ++t) {
        const Index c = perm[t];
        cells[t % cells.size()].push_back({c / p, c % p});
    }
    WoldPlan plan{n, p, {}};
    for (auto& f : cells) {
        plan.folds.emplace_back(n, p, std::move(f));
    }
    return plan;
}

GabrielPlan gabriel_plan(Index n, Index p, Index k_folds, Index l_folds, RngSeed seed) {
    if (k_folds < 2 || k_folds > n) {
        throw DomainError("gabriel_plan: need 2 <= K <= n");
    }
    if (l_folds < 2 || l_folds > p) {
        throw DomainError("gabriel_plan: need 2 <= L <= p");
    }
    CounterRng rows_rng(seed.child(0));
    CounterRng cols_rng(seed.child(1));
    GabrielPlan plan;
    plan.rows = n;
    plan.cols = p;
    plan.row_perm = permutation(n, rows_rng);
    plan.col_perm = permutation(p, cols_rng);
    plan.row_groups = deal(plan.row_perm, k_folds);
    plan.col_groups = deal(plan.col_perm, l_folds);
    return plan;
}

CvCurve wold_pe(const MaskedMatrix& x, const WoldPlan& plan, Index k_max, const EmOptions& em,
                unsigned threads) {
    if (plan.rows != x.rows() || plan.cols != x.cols()) {
        throw ShapeError("wold_pe: plan shape differs from data");
    }
    check_rank(k_max, std::min(x.rows(), x.cols()), "wold_pe");
    const auto folds = static_cast<Index>(plan.folds.size());
    CvCurve curve = empty_curve(folds, k_max);
    std::vector<std::vector<char>> not_converged(static_cast<std::size_t>(folds),
                                                 std::vector<char>(static_cast<std::size_t>(k_max + 1), 0));
    const Matrix& values = x.values();

    parallel_for(static_cast<std::size_t>(folds), threads, [&](std::size_t f) {
        const IndexSet& fold = plan.folds[f];
        std::vector<Cell> test;
        for (const Cell& c : fold) {
            if (x.is_observed(c.row, c.col)) {
                test.push_back(c);
            }
        }
        const auto fold_mask = fold.mask();
        std::vector<Cell> train;
        for (const Cell& c : x.observed()) {
            if (!fold_mask(c.row, c.col)) {
                train.push_back(c);
            }
        }
        if (test.empty() || train.empty()) {
            return;
        }
        const IndexSet test_set(x.rows(), x.cols(), std::move(test));
        const double m = static_cast<double>(test_set.size());
        const MaskedMatrix held(values, IndexSet(x.rows(), x.cols(), std::move(train)));

        const Vector means = held.column_means();
        double sse = 0.0;
        for (const Cell& c : test_set) {
            const double r = values(c.row, c.col) - means(c.col);
            sse += r * r;
        }
        const auto fi = static_cast<Index>(f);
        curve.pe_folds(fi, 0) = sse / m;

        std::optional<Matrix> warm;
        for (Index k = 1; k <= k_max; ++k) {
            EmOptions opts = em;
            if (warm) {
                opts.initial_fill = std::move(warm);
            }
            EmResult res = em_svd(held, k, opts);
            curve.pe_folds(fi, k) = masked_frob_sq(values, res.completion, test_set) / m;
            if (!res.converged) {
                not_converged[f][static_cast<std::size_t>(k)] = 1;
            }
            warm = std::move(res.completion);
        }
    });

    for (const auto& row : not_converged) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (row[k] != 0) {
                curve.rank_flags[k] |= kEmNotConverged;
            }
        }
    }
    summarise(curve);
    return curve;
}

CvCurve wold_pe(const Matrix& x, const WoldPlan& plan, Index k_max, const EmOptions& em,
                unsigned threads) {
    return wold_pe(MaskedMatrix::complete(x), plan, k_max, em, threads);
}

Matrix gabriel_predict(const Matrix& x11, const Matrix& x12, const Matrix& x21, Index k) {
    if (x12.rows() != x11.rows() || x21.cols() != x11.cols()) {
        throw ShapeError("gabriel_predict: block shapes do not conform");
    }
    if (k == 0) {
        return Matrix::Zero(x21.rows(), x12.cols());
    }
    const SvdFactorization f = svd(x11);
    return x21 * pinv_truncated(f, k) * x12;
}

CvCurve gabriel_pe(const Matrix& x, const GabrielPlan& plan, Index k_max, unsigned threads) {
    require_finite(x);
    if (plan.rows != x.rows() || plan.cols != x.cols()) {
        throw ShapeError("gabriel_pe: plan shape differs from data");
    }
    check_rank(k_max, std::min(x.rows(), x.cols()), "gabriel_pe");
    const auto folds = plan.folds();
    CvCurve curve = empty_curve(static_cast<Index>(folds.size()), k_max);

    parallel_for(folds.size(), threads, [&](std::size_t f) {
        const auto& test_rows = plan.row_groups[folds[f].row_group];
        const auto& test_cols = plan.col_groups[folds[f].col_group];
        std::vector<Index> train_rows;
        std::vector<Index> train_cols;
        for (std::size_t g = 0; g < plan.row_groups.size(); ++g) {
            if (g != folds[f].row_group) {
                train_rows.insert(train_rows.end(), plan.row_groups[g].begin(), plan.row_groups[g].end());
            }
        }
        for (std::size_t g = 0; g < plan.col_groups.size(); ++g) {
            if (g != folds[f].col_group) {
                train_cols.insert(train_cols.end(), plan.col_groups[g].begin(), plan.col_groups[g].end());
            }
        }
        std::sort(train_rows.begin(), train_rows.end());
        std::sort(train_cols.begin(), train_cols.end());

        const Matrix x11 = x(train_rows, train_cols);
        const Matrix x12 = x(train_rows, test_cols);
        const Matrix x21 = x(test_rows, train_cols);
        const Matrix x22 = x(test_rows, test_cols);
        const double cells = static_cast<double>(x22.size());
        const auto fi = static_cast<Index>(f);

        const SvdFactorization s = svd(x11);
        const double eps = s.d.size() > 0 ? 1e-12 * s.d(0) : 0.0;
        // X22_hat(k) = sum_{l<k} (X21 v_l)(u_l^T X12) / d_l, built up one term at a time.
        const Matrix left = x21 * s.v;
        const Matrix right = s.u.transpose() * x12;
        Matrix pred = Matrix::Zero(x22.rows(), x22.cols());
        curve.pe_folds(fi, 0) = x22.squaredNorm() / cells;
        for (Index k = 1; k <= k_max; ++k) {
            if (k > s.rank()) {
                break;
            }
            const Index l = k - 1;
            if (s.d(l) > eps) {
                pred.noalias() += (left.col(l) / s.d(l)) * right.row(l);
            }
            curve.pe_folds(fi, k) = (x22 - pred).squaredNorm() / cells;
        }
    });
    summarise(curve);
    return curve;
}

RotatedMatrix rotated(const Matrix& x, RngSeed seed) {
    RotatedMatrix out;
    out.row_rotation = sample_rotation(x.rows(), seed.child(0));
    out.col_rotation = sample_rotation(x.cols(), seed.child(1));
    out.x = out.row_rotation * x * out.col_rotation.transpose();
    return out;
}

CvCurve naive_rowwise_pe(const Matrix& x, const std::vector<Index>& test_rows, Index k_max) {
    require_finite(x);
    std::vector<char> is_test(static_cast<std::size_t>(x.rows()), 0);
    for (const Index r : test_rows) {
        if (r < 0 || r >= x.rows()) {
            throw ShapeError("naive_rowwise_pe: test row out of range");
        }
        is_test[static_cast<std::size_t>(r)] = 1;
    }
    std::vector<Index> test;
    std::vector<Index> train;
    for (Index r = 0; r < x.rows(); ++r) {
        (is_test[static_cast<std::size_t>(r)] != 0 ? test : train).push_back(r);
    }
    if (test.empty() || train.empty()) {
        throw DomainError("naive_rowwise_pe: both row groups must be nonempty");
    }
    check_rank(k_max, x.cols(), "naive_rowwise_pe");
    const Matrix x1 = x(train, Eigen::all);
    const Matrix x2 = x(test, Eigen::all);
    const SvdFactorization s = svd(x1);
    const Matrix proj = x2 * s.v;
    const double cells = static_cast<double>(x2.size());

    CvCurve curve = empty_curve(1, k_max);
    double resid = x2.squaredNorm();
    curve.pe_folds(0, 0) = resid / cells;
    for (Index k = 1; k <= k_max; ++k) {
        if (k <= s.rank()) {
            resid = std::max(0.0, resid - proj.col(k - 1).squaredNorm());
        }
        curve.pe_folds(0, k) = resid / cells;
    }
    summarise(curve);
    return curve;
}

double estimate_sigma2(const Matrix& x, Index k_hint) {
    require_finite(x);
    const Index r = std::min(x.rows(), x.cols());
    if (k_hint < 0 || k_hint >= r) {
        throw DomainError("estimate_sigma2: need 0 <= k_hint < min(n, p)");
    }
    const Vector d = Eigen::BDCSVD<Matrix>(x).singularValues();
    const double tail = d.tail(r - k_hint).squaredNorm();
    return tail / (static_cast<double>(x.rows() - k_hint) * static_cast<double>(x.cols() - k_hint));
}

CvCurve me_curve(const CvCurve& pe, double sigma2_hat) {
    CvCurve me = pe;
    for (auto& v : me.pe_mean) {
        v -= sigma2_hat;
    }
    me.pe_folds.array() -= sigma2_hat;
    return me;
}

std::string curve_csv(const CvCurve& curve) {
    std::string out = "k,pe_mean,se";
    for (Index f = 0; f < curve.pe_folds.rows(); ++f) {
        out += ",fold_" + std::to_string(f);
    }
    out += ",flags\n";
    for (std::size_t k = 0; k < curve.ranks.size(); ++k) {
        out += std::to_string(curve.ranks[k]) + "," + format_double(curve.pe_mean[k]) + "," +
               format_double(curve.se[k]);
        for (Index f = 0; f < curve.pe_folds.rows(); ++f) {
            out += "," + format_double(curve.pe_folds(f, static_cast<Index>(k)));
        }
        std::string flags;
        if ((curve.rank_flags[k] & kEmNotConverged) != 0u) {
            flags = "em_not_converged";
        }
        if ((curve.rank_flags[k] & kDegenerateFold) != 0u) {
            flags += flags.empty() ? "degenerate_fold" : "|degenerate_fold";
        }
        out += "," + flags + "\n";
    }
    return out;
}

}  // namespace lowrankcv
