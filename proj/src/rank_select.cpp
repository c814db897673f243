#include "lowrankcv/rank_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lowrankcv/matrix_io.hpp"
#include "lowrankcv/rmt_oracle.hpp"

namespace lowrankcv {

RankDecision pick_rank(const std::vector<double>& criterion, std::string method) {
    if (criterion.empty()) {
        throw DomainError("pick_rank: empty criterion");
    }
    RankDecision out{0, criterion, std::move(method)};
    double best = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < criterion.size(); ++k) {
        const double v = criterion[k];
        if (!std::isnan(v) && (std::isnan(best) || v < best)) {
            best = v;
            out.chosen_k = static_cast<Index>(k);
        }
    }
    return out;
}

namespace {

void check_k_max(const Matrix& x, Index k_max) {
    if (k_max < 0 || k_max > std::min(x.rows(), x.cols())) {
        throw RankOutOfRange("k_max outside [0, min(n, p)]");
    }
}

// Frobenius loss of each truncation against `target`, normalized by np.
std::vector<double> losses_against(const Matrix& x, const Matrix& target, Index k_max) {
    check_k_max(x, k_max);
    const double np = static_cast<double>(x.size());
    std::vector<double> out;
    Matrix resid = target;
    out.push_back(resid.squaredNorm() / np);
    if (k_max == 0) {
        return out;
    }
    const SvdFactorization f = leading_svd(x, k_max);
    for (Index k = 1; k <= k_max; ++k) {
        resid.noalias() -= f.d(k - 1) * f.u.col(k - 1) * f.v.col(k - 1).transpose();
        out.push_back(resid.squaredNorm() / np);
    }
    return out;
}

}  // namespace

std::vector<double> true_me(const FactorSample& sample, Index k_max) {
    return losses_against(sample.x, sample.signal(), k_max);
}

std::vector<double> true_pe(const FactorSample& sample, Index k_max, RngSeed fresh_noise) {
    const Matrix e2 = gen_noise(sample.noise, sample.x.rows(), sample.x.cols(), sample.sigma2,
                                fresh_noise);
    return losses_against(sample.x, sample.signal() + e2, k_max);
}

std::vector<double> expected_pe(const FactorSample& sample, Index k_max) {
    std::vector<double> me = true_me(sample, k_max);
    for (double& v : me) {
        v += sample.sigma2;
    }
    return me;
}

std::vector<double> spectral_loss(const FactorSample& sample, Index k_max) {
    const Matrix& x = sample.x;
    check_k_max(x, k_max);
    const double n = static_cast<double>(x.rows());
    const auto top_sq = [](const Matrix& m) {
        const Matrix g = m.rows() >= m.cols() ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
        return std::max(0.0, es.eigenvalues()(es.eigenvalues().size() - 1));
    };
    Matrix resid = sample.signal();
    std::vector<double> out{top_sq(resid) / n};
    if (k_max == 0) {
        return out;
    }
    const SvdFactorization f = leading_svd(x, k_max);
    for (Index k = 1; k <= k_max; ++k) {
        resid.noalias() -= f.d(k - 1) * f.u.col(k - 1) * f.v.col(k - 1).transpose();
        out.push_back(top_sq(resid) / n);
    }
    return out;
}

BicCurves bic_curves(const Matrix& x, Index k_max) {
    require_finite(x);
    const Index r = std::min(x.rows(), x.cols());
    if (k_max < 0 || k_max >= r) {
        throw RankOutOfRange("bic_curves: need 0 <= k_max < min(n, p)");
    }
    const Vector d = Eigen::BDCSVD<Matrix>(x).singularValues();
    const double n = static_cast<double>(x.rows());
    const double p = static_cast<double>(x.cols());
    const double c = std::min(std::sqrt(n), std::sqrt(p));
    const double pen1 = (n + p) / (n * p) * std::log(n * p / (n + p));
    const double pen2 = (n + p) / (n * p) * std::log(c);
    const double pen3 = std::log(c * c) / c;
    BicCurves out;
    for (Index k = 0; k <= k_max; ++k) {
        const double rss = std::max(d.tail(r - k).squaredNorm(), 1e-300);
        const double base = std::log(rss);
        const double kk = static_cast<double>(k);
        out.bic1.push_back(base + kk * pen1);
        out.bic2.push_back(base + kk * pen2);
        out.bic3.push_back(base + kk * pen3);
    }
    return out;
}

std::vector<double> scree(const Matrix& x) {
    require_finite(x);
    const Vector d2 = Eigen::BDCSVD<Matrix>(x).singularValues().array().square();
    const double total = d2.sum();
    std::vector<double> out(static_cast<std::size_t>(d2.size()), 0.0);
    if (total > 0.0) {
        for (Index i = 0; i < d2.size(); ++i) {
            out[static_cast<std::size_t>(i)] = d2(i) / total;
        }
    }
    return out;
}

Matrix shrunk_truncate(const Matrix& x, Index k, double gamma, double sigma2) {
    require_finite(x);
    if (k < 0 || k > std::min(x.rows(), x.cols())) {
        throw RankOutOfRange("shrunk_truncate: k outside [0, min(n, p)]");
    }
    if (k == 0) {
        return Matrix::Zero(x.rows(), x.cols());
    }
    SvdFactorization f = leading_svd(x, k);
    const double rn = std::sqrt(static_cast<double>(x.rows()));
    for (Index i = 0; i < k; ++i) {
        f.d(i) = rn * shrink(f.d(i) / rn, gamma, sigma2);
    }
    return truncate(f, k);
}

std::string criterion_csv(const Matrix& x, Index k_max) {
    const BicCurves b = bic_curves(x, k_max);
    const std::vector<double> s = scree(x);
    std::string out = "k,bic1,bic2,bic3,scree\n";
    for (Index k = 0; k <= k_max; ++k) {
        const auto i = static_cast<std::size_t>(k);
        out += std::to_string(k) + "," + format_double(b.bic1[i]) + "," + format_double(b.bic2[i]) +
               "," + format_double(b.bic3[i]) + ",";
        if (k >= 1) {
            out += format_double(s[i - 1]);
        }
        out += "\n";
    }
    return out;
}

}  // namespace lowrankcv
