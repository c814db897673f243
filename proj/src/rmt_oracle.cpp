#include "lowrankcv/rmt_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace lowrankcv {

namespace {

void require_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw DomainError("aspect ratio gamma must be positive and finite");
    }
}

void require_sigma2(double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw DomainError("noise variance must be positive and finite");
    }
}

double sq(double x) { return x * x; }

}  // namespace

SpikedModel::SpikedModel(double gamma, double sigma2, std::vector<double> mus)
    : gamma_(gamma), sigma2_(sigma2), mus_(std::move(mus)) {
    require_gamma(gamma_);
    require_sigma2(sigma2_);
    for (std::size_t i = 0; i < mus_.size(); ++i) {
        if (!(mus_[i] > 0.0) || !std::isfinite(mus_[i])) {
            throw DomainError("factor strengths must be positive");
        }
        if (i > 0 && !(mus_[i] < mus_[i - 1])) {
            throw DomainError("factor strengths must be strictly decreasing");
        }
    }
}

double SpikedModel::detection_threshold() const { return sigma2_ / std::sqrt(gamma_); }

double SpikedModel::bulk_edge() const { return sigma2_ * sq(1.0 + 1.0 / std::sqrt(gamma_)); }

std::pair<double, double> mp_edges(double gamma) {
    require_gamma(gamma);
    const double g = 1.0 / std::sqrt(gamma);
    return {sq(1.0 - g), sq(1.0 + g)};
}

double mp_pdf(double x, double gamma) {
    const auto [a, b] = mp_edges(gamma);
    if (!(x > a && x < b) || x <= 0.0) {
        return 0.0;
    }
    return gamma / (2.0 * std::numbers::pi * x) * std::sqrt((x - a) * (b - x));
}

double mp_cdf(double x, double gamma) {
    const auto [a, b] = mp_edges(gamma);
    if (x < 0.0) {
        return 0.0;
    }
    const double atom = std::max(0.0, 1.0 - gamma);
    if (x <= a) {
        return atom;
    }
    if (x >= b) {
        return 1.0;
    }
    // t = a + (b - a) sin^2(theta / 2) removes both square-root endpoints,
    // and the 1/t pole at a = 0 cancels against sin^2(theta / 2).
    const double w = b - a;
    const auto integrand = [&](double theta) {
        const double s = std::sin(0.5 * theta);
        const double c = std::cos(0.5 * theta);
        const double t = a + w * s * s;
        return gamma * w * w * 4.0 * s * s * c * c / (8.0 * std::numbers::pi * t);
    };
    const double upper = 2.0 * std::asin(std::sqrt((x - a) / w));
    const double mass = integrate(integrand, 0.0, upper, 1e-12);
    return std::clamp(atom + mass, 0.0, 1.0);
}

double stieltjes(double z, double gamma) {
    const auto [a, b] = mp_edges(gamma);
    if (!(z > b)) {
        throw DomainError("stieltjes: z must exceed the upper bulk edge " + std::to_string(b));
    }
    const double p = z - 1.0 + 1.0 / gamma;
    const double root = std::sqrt((z - b) * (z - a));
    // Rationalised form of gamma (-p + root) / (2z); no cancellation for large z.
    return -2.0 / (root + p);
}

double stieltjes_inverse(double m, double gamma) {
    require_gamma(gamma);
    const double lower = -1.0 / (1.0 / std::sqrt(gamma) + 1.0 / gamma);
    if (!(m > lower && m < 0.0)) {
        throw DomainError("stieltjes_inverse: m outside (" + std::to_string(lower) + ", 0)");
    }
    return -1.0 / m + 1.0 / (1.0 + m / gamma);
}

SpikedLimits spiked_limits(const SpikedModel& model) {
    const double g = model.gamma();
    const double s2 = model.sigma2();
    SpikedLimits out;
    out.bulk_edge = model.bulk_edge();
    for (const double mu : model.mus()) {
        FactorLimit f;
        f.above_threshold = mu > model.detection_threshold();
        if (f.above_threshold) {
            const double num = 1.0 - sq(s2) / (g * mu * mu);
            f.mu_bar = (mu + s2) * (1.0 + s2 / (g * mu));
            f.theta2 = num / (1.0 + s2 / (g * mu));
            f.phi2 = num / (1.0 + s2 / mu);
        } else {
            f.mu_bar = out.bulk_edge;
        }
        out.factors.push_back(f);
    }
    return out;
}

Matrix spiked_value_covariance(const SpikedModel& model, const Matrix& sigma_d) {
    const auto k = static_cast<Index>(model.factors());
    if (sigma_d.rows() != k || sigma_d.cols() != k) {
        throw ShapeError("sigma_d must be k0 x k0");
    }
    const double g = model.gamma();
    const double s2 = model.sigma2();
    const auto& mus = model.mus();
    Vector shrink_factor = Vector::Zero(k);
    for (Index i = 0; i < k; ++i) {
        const double mu = mus[static_cast<std::size_t>(i)];
        if (mu > model.detection_threshold()) {
            shrink_factor(i) = 1.0 - sq(s2) / (g * mu * mu);
        }
    }
    Matrix out = Matrix::Zero(k, k);
    for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j < k; ++j) {
            if (shrink_factor(i) == 0.0 || shrink_factor(j) == 0.0) {
                continue;
            }
            out(i, j) = sigma_d(i, j) * shrink_factor(i) * shrink_factor(j);
            if (i == j) {
                const double mu = mus[static_cast<std::size_t>(i)];
                out(i, j) += 2.0 * s2 * (2.0 * mu + (1.0 + 1.0 / g) * s2) * shrink_factor(i);
            }
        }
    }
    return out;
}

double frob_alpha(double mu, double gamma, double sigma2) {
    require_gamma(gamma);
    require_sigma2(sigma2);
    if (!(mu > 0.0)) {
        throw DomainError("frob_alpha: mu must be positive");
    }
    if (mu > sigma2 / std::sqrt(gamma)) {
        return sigma2 * (3.0 * sigma2 + (gamma + 1.0) * mu) / (gamma * mu * mu);
    }
    return 1.0 + (sigma2 / mu) * sq(1.0 + 1.0 / std::sqrt(gamma));
}

double frob_cutoff(double gamma, double sigma2) {
    require_gamma(gamma);
    require_sigma2(sigma2);
    const double h = 0.5 * (1.0 + 1.0 / gamma);
    return sigma2 * (h + std::sqrt(h * h + 3.0 / gamma));
}

std::pair<double, double> loss_block_trace_det(double mu, bool kept, double gamma,
                                               double sigma2) {
    require_gamma(gamma);
    require_sigma2(sigma2);
    if (mu < 0.0) {
        throw DomainError("loss_block_trace_det: mu must be nonnegative");
    }
    const double edge = sigma2 * sq(1.0 + 1.0 / std::sqrt(gamma));
    if (!kept) {
        return {mu, 0.0};
    }
    if (mu > sigma2 / std::sqrt(gamma)) {
        const double r = sigma2 / (gamma * mu);
        return {r * (3.0 * sigma2 + (gamma + 1.0) * mu),
                r * r * (mu + sigma2) * (gamma * mu + sigma2)};
    }
    return {mu + edge, mu * edge};
}

double spectral_from_trace_det(double trace, double det) {
    const double disc = std::max(0.0, trace * trace - 4.0 * det);
    return 0.5 * (trace + std::sqrt(disc));
}

LossLimitCurve loss_limit_curves(const SpikedModel& model, std::size_t k_max) {
    const std::size_t k0 = model.factors();
    if (k_max < k0) {
        throw DomainError("loss_limit_curves: k_max must be at least the number of factors");
    }
    const double g = model.gamma();
    const double s2 = model.sigma2();
    const auto& mus = model.mus();
    LossLimitCurve out;
    for (const double mu : mus) {
        out.alpha.push_back(frob_alpha(mu, g, s2));
    }
    for (std::size_t k = 0; k <= k_max; ++k) {
        double frob = 0.0;
        double spec = 0.0;
        for (std::size_t i = 0; i < std::max(k, k0); ++i) {
            const double mu = i < k0 ? mus[i] : 0.0;
            const auto [tr, det] = loss_block_trace_det(mu, i < k, g, s2);
            frob += tr;
            spec = std::max(spec, spectral_from_trace_det(tr, det));
        }
        out.frob_limit.push_back(frob);
        out.spec_limit.push_back(spec);
    }
    return out;
}

double shrink(double d_hat, double gamma, double sigma2) {
    require_gamma(gamma);
    require_sigma2(sigma2);
    const double edge = std::sqrt(sigma2) * (1.0 + 1.0 / std::sqrt(gamma));
    if (!(d_hat > edge)) {
        return 0.0;
    }
    const double d2 = d_hat * d_hat;
    const double v = d2 - 2.0 * (1.0 + 1.0 / gamma) * sigma2 +
                     sq(1.0 - 1.0 / gamma) * sigma2 * sigma2 / d2;
    return std::sqrt(std::max(0.0, v));
}

Vector secular_t0(double z, const SpikedModel& model) {
    if (!(z > model.bulk_edge())) {
        throw DomainError("secular_t0: z must exceed the bulk edge");
    }
    const double g = model.gamma();
    const double s2 = model.sigma2();
    const double m = stieltjes(z / s2, g);
    Vector out(static_cast<Index>(model.factors()));
    for (std::size_t i = 0; i < model.factors(); ++i) {
        out(static_cast<Index>(i)) = model.mus()[i] / (1.0 + m / g) + s2 / m;
    }
    return out;
}

GramBlocks GramBlocks::split(const Matrix& s, Index k) {
    if (s.rows() != s.cols()) {
        throw ShapeError("GramBlocks::split needs a square matrix");
    }
    if (k < 0 || k > s.rows()) {
        throw RankOutOfRange("GramBlocks::split: k outside [0, p]");
    }
    const Index r = s.rows() - k;
    return {s.topLeftCorner(k, k), s.topRightCorner(k, r), s.bottomLeftCorner(r, k),
            s.bottomRightCorner(r, r)};
}

Matrix secular_tn(double z, const GramBlocks& blocks) {
    const Index k = blocks.s11.rows();
    const Index r = blocks.s22.rows();
    if (r == 0) {
        return blocks.s11 - z * Matrix::Identity(k, k);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(blocks.s22);
    const Vector& ev = es.eigenvalues();
    for (Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i) - z) <= 1e-12 * std::max(1.0, std::abs(ev(i)))) {
            throw SingularShift("secular_tn: z coincides with an eigenvalue of S22");
        }
    }
    // (S22 - zI)^{-1} through the eigendecomposition already at hand.
    const Matrix& q = es.eigenvectors();
    const Vector inv = (ev.array() - z).inverse().matrix();
    const Matrix qt_s21 = q.transpose() * blocks.s21;
    const Matrix s12_q = blocks.s12 * q;
    return blocks.s11 - z * Matrix::Identity(k, k) - s12_q * inv.asDiagonal() * qt_s21;
}

EigenPerturbation perturb_eigs(const Vector& lambda, const Matrix& h, double n) {
    const Index k = lambda.size();
    if (h.rows() != k || h.cols() != k) {
        throw ShapeError("perturb_eigs: H must be square with the size of lambda");
    }
    if (!(n > 0.0)) {
        throw DomainError("perturb_eigs: n must be positive");
    }
    for (Index i = 1; i < k; ++i) {
        if (!(lambda(i) < lambda(i - 1))) {
            throw DegenerateSpectrum("perturb_eigs: lambda must be strictly decreasing");
        }
    }
    const double rn = std::sqrt(n);
    EigenPerturbation out;
    out.values = lambda + h.diagonal() / rn;
    out.vectors = Matrix::Identity(k, k);
    for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j < k; ++j) {
            if (i != j) {
                out.vectors(i, j) = -h(i, j) / (rn * (lambda(i) - lambda(j)));
            }
        }
    }
    return out;
}

BcvPlan bcv_bias(const SpikedModel& model, double k_folds, double l_folds) {
    if (!(k_folds > 1.0) || !(l_folds > 1.0)) {
        throw DomainError("bcv_bias: fold counts must exceed 1");
    }
    const double g = model.gamma();
    const double s2 = model.sigma2();
    const double kf = (k_folds - 1.0) / k_folds;
    const double lf = (l_folds - 1.0) / l_folds;
    BcvPlan out;
    out.k_folds = k_folds;
    out.l_folds = l_folds;
    out.rho = kf * lf;
    out.gamma1 = g * kf + lf;
    out.eta = s2 / sq(std::sqrt(g) + std::sqrt(1.0 / kf) * std::sqrt(lf));
    const double threshold = s2 / std::sqrt(out.rho * g);
    for (const double mu : model.mus()) {
        if (mu > threshold) {
            const double num = s2 / (g * mu * mu) * (3.0 * s2 + out.gamma1 * mu);
            const double den = out.rho + out.gamma1 * s2 / (g * mu) + s2 * s2 / (g * mu * mu);
            out.betas.push_back(num / den);
        } else {
            out.betas.push_back(1.0 + out.eta / mu);
        }
    }
    return out;
}

namespace {
double gamma_bar(double gamma) {
    require_gamma(gamma);
    return sq(0.5 * (std::sqrt(gamma) + 1.0 / std::sqrt(gamma)));
}
}  // namespace

BcvFoldPlan bcv_plan(double gamma) {
    const double gb = gamma_bar(gamma);
    const double root_rho = std::numbers::sqrt2 / (std::sqrt(gb) + std::sqrt(gb + 3.0));
    return {root_rho * root_rho, 1.0 / (1.0 - root_rho)};
}

double bcv_plan_alt_general(double gamma) {
    const double gb = gamma_bar(gamma);
    return 3.0 / (3.0 - 2.0 * (std::sqrt(gb + 3.0) - std::sqrt(gb)));
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (a == b) {
        return 0.0;
    }
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, tol);
}

}  // namespace lowrankcv
