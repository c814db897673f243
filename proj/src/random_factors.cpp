#include "lowrankcv/random_factors.hpp"

#include <cmath>
#include <string>

namespace lowrankcv {

namespace {

Matrix gaussian_matrix(Index rows, Index cols, CounterRng& rng, double scale = 1.0) {
    Matrix g(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            g(i, j) = scale * rng.normal();
        }
    }
    return g;
}

Matrix orthonormal_columns(const Matrix& a) {
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
    // Match the sign of each column to the original so re-orthonormalizing an
    // almost orthonormal frame barely moves it.
    const Matrix r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
    for (Index j = 0; j < a.cols(); ++j) {
        if (r(j, j) < 0.0) {
            q.col(j) = -q.col(j);
        }
    }
    return q;
}

Matrix sparse_factor(Index rows, Index cols, double s, CounterRng& rng) {
    const double atom = 1.0 / std::sqrt(s * static_cast<double>(rows));
    Matrix f = Matrix::Zero(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            const double u = rng.uniform();
            if (u < 0.5 * s) {
                f(i, j) = -atom;
            } else if (u < s) {
                f(i, j) = atom;
            }
        }
    }
    return f;
}

Matrix one_factor(const FactorSpec& spec, Index rows, Index k0, CounterRng& rng) {
    switch (spec.kind) {
        case FactorKind::gaussian:
            return gaussian_matrix(rows, k0, rng, 1.0 / std::sqrt(static_cast<double>(rows)));
        case FactorKind::sparse:
            return sparse_factor(rows, k0, spec.sparsity, rng);
        case FactorKind::stiefel:
            return sample_stiefel(rows, k0, rng);
    }
    throw DomainError("unknown factor kind");
}

}  // namespace

Matrix sample_stiefel(Index p, Index k, CounterRng& rng) {
    if (k < 1 || k > p) {
        throw DomainError("sample_stiefel: need 1 <= k <= p");
    }
    const Matrix z = gaussian_matrix(p, k, rng);
    Eigen::HouseholderQR<Matrix> qr(z);
    Matrix q = qr.householderQ() * Matrix::Identity(p, k);
    for (Index j = 0; j < k; ++j) {
        q.col(j) *= rng.sign();
    }
    return q;
}

Matrix sample_stiefel(Index p, Index k, RngSeed seed) {
    CounterRng rng(seed);
    return sample_stiefel(p, k, rng);
}

Matrix sample_rotation(Index n, RngSeed seed) {
    if (n < 1) {
        throw DomainError("sample_rotation: n must be positive");
    }
    return sample_stiefel(n, n, seed);
}

std::string to_string(FactorKind kind) {
    switch (kind) {
        case FactorKind::gaussian:
            return "gaussian";
        case FactorKind::sparse:
            return "sparse";
        case FactorKind::stiefel:
            return "stiefel";
    }
    return "unknown";
}

std::string to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::white:
            return "white";
        case NoiseKind::heavy:
            return "heavy";
        case NoiseKind::colored:
            return "colored";
    }
    return "unknown";
}

FactorPair gen_factors(const FactorSpec& spec, Index n, Index p, Index k0, RngSeed seed) {
    if (k0 < 0 || k0 > std::min(n, p)) {
        throw DomainError("gen_factors: need 0 <= k0 <= min(n, p)");
    }
    if (spec.kind == FactorKind::sparse && !(spec.sparsity > 0.0 && spec.sparsity <= 1.0)) {
        throw DomainError("gen_factors: sparsity must lie in (0, 1]");
    }
    if (k0 == 0) {
        return {Matrix::Zero(n, 0), Matrix::Zero(p, 0)};
    }
    CounterRng ru(seed.child(0));
    CounterRng rv(seed.child(1));
    FactorPair out{one_factor(spec, n, k0, ru), one_factor(spec, p, k0, rv)};
    if (spec.orthonormalize && spec.kind != FactorKind::stiefel) {
        out.u = orthonormal_columns(out.u);
        out.v = orthonormal_columns(out.v);
    }
    return out;
}

Matrix gen_noise(const NoiseSpec& spec, Index n, Index p, double sigma2, RngSeed seed) {
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
        throw DomainError("gen_noise: sigma2 must be nonnegative");
    }
    const double sigma = std::sqrt(sigma2);
    CounterRng rng(seed);
    Matrix e(n, p);
    switch (spec.kind) {
        case NoiseKind::white:
            e = gaussian_matrix(n, p, rng, sigma);
            break;
        case NoiseKind::heavy: {
            const double nu = spec.nu1;
            if (!(nu > 2.0)) {
                throw DomainError("gen_noise: heavy noise needs nu > 2");
            }
            const double scale = sigma / std::sqrt(nu / (nu - 2.0));
            for (Index j = 0; j < p; ++j) {
                for (Index i = 0; i < n; ++i) {
                    e(i, j) = scale * rng.student_t(nu);
                }
            }
            break;
        }
        case NoiseKind::colored: {
            if (!(spec.nu1 > 2.0) || !(spec.nu2 > 2.0)) {
                throw DomainError("gen_noise: colored noise needs nu1, nu2 > 2");
            }
            Vector row_var(n);
            Vector col_var(p);
            for (Index i = 0; i < n; ++i) {
                row_var(i) = 1.0 / rng.chi_square(spec.nu1);
            }
            for (Index j = 0; j < p; ++j) {
                col_var(j) = 1.0 / rng.chi_square(spec.nu2);
            }
            const double c = std::sqrt(1.0 / (spec.nu1 - 2.0) + 1.0 / (spec.nu2 - 2.0));
            for (Index j = 0; j < p; ++j) {
                for (Index i = 0; i < n; ++i) {
                    e(i, j) = sigma * std::sqrt(row_var(i) + col_var(j)) * rng.normal() / c;
                }
            }
            break;
        }
    }
    return e;
}

Matrix FactorSample::signal() const {
    const double rn = std::sqrt(static_cast<double>(x.rows()));
    return rn * u * d.asDiagonal() * v.transpose();
}

FactorSample sample_model(Index n, Index p, const std::vector<double>& strengths,
                          const FactorSpec& factor, const NoiseSpec& noise, double sigma2,
                          RngSeed seed) {
    if (n < 1 || p < 1) {
        throw DomainError("sample_model: n and p must be positive");
    }
    for (std::size_t i = 0; i < strengths.size(); ++i) {
        if (!(strengths[i] >= 0.0) || (i > 0 && strengths[i] > strengths[i - 1])) {
            throw DomainError("sample_model: strengths must be nonincreasing and nonnegative");
        }
    }
    const auto k0 = static_cast<Index>(strengths.size());
    FactorSample s;
    s.factor = factor;
    s.noise = noise;
    s.sigma2 = sigma2;
    s.seed = seed;
    const FactorPair f = gen_factors(factor, n, p, k0, seed.child(0));
    s.u = f.u;
    s.v = f.v;
    s.d = Eigen::Map<const Vector>(strengths.data(), k0);
    s.e = gen_noise(noise, n, p, sigma2, seed.child(1));
    s.x = s.e;
    if (k0 > 0) {
        s.x += std::sqrt(static_cast<double>(n)) * s.u * s.d.asDiagonal() * s.v.transpose();
    }
    return s;
}

double frame_projection_defect(const Matrix& u, Index q, RngSeed seed) {
    const Index p = u.rows();
    const Index k = u.cols();
    if (q < k || q > p) {
        throw DomainError("frame_projection_defect: need k <= q <= p");
    }
    const Matrix v = sample_stiefel(p, q, seed);
    const Matrix ut = std::sqrt(static_cast<double>(p) / static_cast<double>(q)) * v.transpose() * u;
    const Vector sv = Eigen::JacobiSVD<Matrix>(ut).singularValues();
    return static_cast<double>(q) * (sv.array() - 1.0).square().sum();
}

}  // namespace lowrankcv
