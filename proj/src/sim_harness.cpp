#include "lowrankcv/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "lowrankcv/cv_engine.hpp"
#include "lowrankcv/matrix_io.hpp"
#include "lowrankcv/parallel.hpp"
#include "lowrankcv/rank_select.hpp"
#include "lowrankcv/rmt_oracle.hpp"

#ifndef LOWRANKCV_VERSION
#define LOWRANKCV_VERSION "unknown"
#endif

namespace lowrankcv {

namespace {

const std::vector<std::pair<Method, std::string>>& method_names() {
    static const std::vector<std::pair<Method, std::string>> names = {
        {Method::true_pe, "true_pe"},       {Method::cv_wold, "cv-wold"},
        {Method::cv_gabriel, "cv-gabriel"}, {Method::rcv_wold, "rcv-wold"},
        {Method::rcv_gabriel, "rcv-gabriel"}, {Method::bic1, "bic1"},
        {Method::bic2, "bic2"},             {Method::bic3, "bic3"},
    };
    return names;
}

std::vector<Method> all_methods() {
    std::vector<Method> out;
    for (const auto& [m, name] : method_names()) {
        out.push_back(m);
    }
    return out;
}

Index choose_rank(Method m, const FactorSample& sample, Index reference, const SimConfig& c,
                  RngSeed seed) {
    const Matrix& x = sample.x;
    switch (m) {
        case Method::true_pe:
            return reference;
        case Method::cv_wold:
            return wold_pe(x, wold_plan(c.n, c.p, c.wold_folds, seed), c.k_max, c.em).argmin();
        case Method::cv_gabriel:
            return gabriel_pe(x, gabriel_plan(c.n, c.p, c.gabriel_k, c.gabriel_l, seed), c.k_max)
                .argmin();
        case Method::rcv_wold: {
            const RotatedMatrix r = rotated(x, seed.child(0));
            return wold_pe(r.x, wold_plan(c.n, c.p, c.wold_folds, seed.child(1)), c.k_max, c.em)
                .argmin();
        }
        case Method::rcv_gabriel: {
            const RotatedMatrix r = rotated(x, seed.child(0));
            return gabriel_pe(r.x, gabriel_plan(c.n, c.p, c.gabriel_k, c.gabriel_l, seed.child(1)),
                              c.k_max)
                .argmin();
        }
        case Method::bic1:
            return pick_rank(bic_curves(x, c.k_max).bic1).chosen_k;
        case Method::bic2:
            return pick_rank(bic_curves(x, c.k_max).bic2).chosen_k;
        case Method::bic3:
            return pick_rank(bic_curves(x, c.k_max).bic3).chosen_k;
    }
    throw DomainError("unknown method");
}

void validate(const SimConfig& c) {
    if (c.replicates < 1) {
        throw DomainError("simulation needs at least one replicate");
    }
    if (c.methods.empty()) {
        throw DomainError("simulation needs at least one method");
    }
    if (c.n < 2 || c.p < 2) {
        throw DomainError("simulation needs n, p >= 2");
    }
    if (c.k_max < 0 || c.k_max >= std::min(c.n, c.p)) {
        throw DomainError("simulation k_max must lie in [0, min(n, p))");
    }
    if (static_cast<Index>(c.strengths.size()) > std::min(c.n, c.p)) {
        throw DomainError("more factors than min(n, p)");
    }
}

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
    mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) {
        ss += (x - mean) * (x - mean);
    }
    sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

std::string to_string(Method m) {
    for (const auto& [mm, name] : method_names()) {
        if (mm == m) {
            return name;
        }
    }
    return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
    for (const auto& [m, n] : method_names()) {
        if (n == name) {
            return m;
        }
    }
    return std::nullopt;
}

std::vector<double> weak_strengths() { return {10.0, 9.0, 8.0, 7.0, 6.0, 5.0}; }

std::vector<double> strong_strengths(Index n) {
    std::vector<double> d = weak_strengths();
    for (double& x : d) {
        x *= std::sqrt(static_cast<double>(n));
    }
    return d;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const char* s : {"strong", "weak"}) {
        for (const char* f : {"gauss", "sparse"}) {
            for (const char* e : {"white", "heavy", "colored"}) {
                out.push_back(std::string(s) + "-" + f + "-" + e);
            }
        }
    }
    return out;
}

SimConfig preset(const std::string& name) {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        throw DomainError("unknown preset '" + name + "'");
    }
    SimConfig c;
    c.name = name;
    const bool strong = name.starts_with("strong");
    c.strengths = strong ? strong_strengths(c.n) : weak_strengths();
    c.factor = name.find("-sparse-") != std::string::npos ? FactorSpec::sparse(0.1)
                                                           : FactorSpec::gaussian();
    if (name.ends_with("white")) {
        c.noise = NoiseSpec::white();
    } else if (name.ends_with("heavy")) {
        c.noise = NoiseSpec::heavy(3.0);
    } else {
        c.noise = NoiseSpec::colored(3.0, 3.0);
    }
    c.methods = all_methods();
    return c;
}

double SimReport::offset_zero_frequency(Method m) const {
    const auto it = std::find(config.methods.begin(), config.methods.end(), m);
    if (it == config.methods.end()) {
        throw DomainError("method not part of this report");
    }
    const auto& h = histograms[static_cast<std::size_t>(it - config.methods.begin())];
    const auto zero = h.find(0);
    const int hits = zero == h.end() ? 0 : zero->second;
    return static_cast<double>(hits) / static_cast<double>(config.replicates);
}

SimReport run_simulation(const SimConfig& config) {
    validate(config);
    const RngSeed master{config.seed, 0};
    const std::size_t reps = static_cast<std::size_t>(config.replicates);
    const std::size_t nm = config.methods.size();

    SimReport report;
    report.config = config;
    report.records.resize(reps);
    std::vector<std::vector<double>> curves(reps);

    parallel_for(reps, config.threads, [&](std::size_t r) {
        const RngSeed rep = master.child(r);
        const FactorSample sample = sample_model(config.n, config.p, config.strengths,
                                                 config.factor, config.noise, config.sigma2,
                                                 rep.child(0));
        curves[r] = expected_pe(sample, config.k_max);
        ReplicateRecord rec;
        rec.replicate = static_cast<int>(r);
        rec.reference_k = pick_rank(curves[r]).chosen_k;
        rec.chosen.assign(nm, -1);
        rec.errors.assign(nm, {});
        for (std::size_t i = 0; i < nm; ++i) {
            const Method m = config.methods[i];
            try {
                rec.chosen[i] = choose_rank(m, sample, rec.reference_k, config,
                                            rep.child(1).child(static_cast<std::uint64_t>(m)));
            } catch (const std::exception& e) {
                rec.errors[i] = e.what();
            }
        }
        report.records[r] = std::move(rec);
    });

    report.histograms.assign(nm, {});
    report.failures.assign(nm, 0);
    for (const auto& rec : report.records) {
        for (std::size_t i = 0; i < nm; ++i) {
            if (rec.chosen[i] < 0) {
                ++report.failures[i];
            } else {
                ++report.histograms[i][rec.chosen[i] - rec.reference_k];
            }
        }
    }

    const auto ranks = static_cast<std::size_t>(config.k_max + 1);
    report.pe_mean.assign(ranks, 0.0);
    report.pe_se.assign(ranks, 0.0);
    for (std::size_t k = 0; k < ranks; ++k) {
        std::vector<double> col;
        for (const auto& c : curves) {
            col.push_back(c[k]);
        }
        double mean = 0.0;
        double sd = 0.0;
        mean_sd(col, mean, sd);
        report.pe_mean[k] = mean;
        report.pe_se[k] = sd / std::sqrt(static_cast<double>(col.size()));
    }
    return report;
}

std::string report_csv(const SimReport& report) {
    std::string out = "method,offset,count\n";
    for (std::size_t i = 0; i < report.config.methods.size(); ++i) {
        const std::string name = to_string(report.config.methods[i]);
        for (const auto& [offset, count] : report.histograms[i]) {
            out += name + "," + std::to_string(offset) + "," + std::to_string(count) + "\n";
        }
        if (report.failures[i] > 0) {
            out += name + ",failed," + std::to_string(report.failures[i]) + "\n";
        }
    }
    return out;
}

std::string report_curves_csv(const SimReport& report) {
    std::string out = "k,mean,sd,prediction\n";
    const double sqrt_reps = std::sqrt(static_cast<double>(report.config.replicates));
    for (std::size_t k = 0; k < report.pe_mean.size(); ++k) {
        out += std::to_string(k) + "," + format_double(report.pe_mean[k]) + "," +
               format_double(report.pe_se[k] * sqrt_reps) + ",\n";
    }
    return out;
}

std::string report_manifest(const SimReport& report) {
    const SimConfig& c = report.config;
    nlohmann::ordered_json j;
    j["tool"] = "lowrankcv";
    j["version"] = LOWRANKCV_VERSION;
    j["preset"] = c.name;
    j["seed"] = c.seed;
    j["n"] = c.n;
    j["p"] = c.p;
    j["strengths"] = c.strengths;
    j["factor"] = {{"kind", to_string(c.factor.kind)},
                   {"sparsity", c.factor.sparsity},
                   {"orthonormalize", c.factor.orthonormalize}};
    j["noise"] = {{"kind", to_string(c.noise.kind)}, {"nu1", c.noise.nu1}, {"nu2", c.noise.nu2}};
    j["sigma2"] = c.sigma2;
    std::vector<std::string> methods;
    for (const Method m : c.methods) {
        methods.push_back(to_string(m));
    }
    j["methods"] = methods;
    j["replicates"] = c.replicates;
    j["k_max"] = c.k_max;
    j["wold_folds"] = c.wold_folds;
    j["gabriel_folds"] = {c.gabriel_k, c.gabriel_l};
    j["em"] = {{"tol", c.em.tol}, {"max_iter", c.em.max_iter}};
    return j.dump(2) + "\n";
}

std::vector<LossSweepRow> loss_sweep(const LossSweepConfig& config) {
    if (config.replicates < 1) {
        throw DomainError("loss_sweep needs at least one replicate");
    }
    std::vector<LossSweepRow> rows;
    std::uint64_t cell = 0;
    for (const double gamma : config.gammas) {
        for (const double size : config.sizes) {
            if (!(gamma > 0.0) || !(size > 0.0)) {
                throw DomainError("loss_sweep: gamma and size must be positive");
            }
            const auto n = static_cast<Index>(std::llround(std::sqrt(size * gamma)));
            const auto p = static_cast<Index>(std::llround(std::sqrt(size / gamma)));
            if (n < 1 || p < 1 || config.k_max > std::min(n, p)) {
                throw DomainError("loss_sweep: size too small for k_max");
            }
            const double g = static_cast<double>(n) / static_cast<double>(p);
            const double cutoff = frob_cutoff(g, config.sigma2);
            std::vector<double> mus;
            std::vector<double> d;
            for (const double m : config.mu_multipliers) {
                mus.push_back(m * cutoff);
                d.push_back(std::sqrt(m * cutoff));
            }
            const SpikedModel model(g, config.sigma2, mus);
            const LossLimitCurve limit = loss_limit_curves(model, static_cast<std::size_t>(config.k_max));

            const auto reps = static_cast<std::size_t>(config.replicates);
            std::vector<std::vector<double>> frob(reps);
            std::vector<std::vector<double>> spec(reps);
            const RngSeed base = RngSeed{config.seed, 0}.child(cell++);
            parallel_for(reps, config.threads, [&](std::size_t r) {
                const FactorSample s = sample_model(n, p, d, FactorSpec::stiefel(),
                                                    NoiseSpec::white(), config.sigma2, base.child(r));
                frob[r] = true_me(s, config.k_max);
                for (double& v : frob[r]) {
                    v *= static_cast<double>(p);
                }
                spec[r] = spectral_loss(s, config.k_max);
            });

            for (int which = 0; which < 2; ++which) {
                const auto& data = which == 0 ? frob : spec;
                const auto& pred = which == 0 ? limit.frob_limit : limit.spec_limit;
                for (Index k = 0; k <= config.k_max; ++k) {
                    std::vector<double> col;
                    for (const auto& v : data) {
                        col.push_back(v[static_cast<std::size_t>(k)]);
                    }
                    LossSweepRow row;
                    row.gamma = gamma;
                    row.size = size;
                    row.n = n;
                    row.p = p;
                    row.loss = which == 0 ? "frobenius" : "spectral";
                    row.k = k;
                    mean_sd(col, row.mean, row.sd);
                    row.prediction = pred[static_cast<std::size_t>(k)];
                    rows.push_back(row);
                }
            }
        }
    }
    return rows;
}

std::string loss_sweep_csv(const std::vector<LossSweepRow>& rows) {
    std::string out = "gamma,size,n,p,loss,k,mean,sd,prediction\n";
    for (const auto& r : rows) {
        out += format_double(r.gamma) + "," + format_double(r.size) + "," + std::to_string(r.n) +
               "," + std::to_string(r.p) + "," + r.loss + "," + std::to_string(r.k) + "," +
               format_double(r.mean) + "," + format_double(r.sd) + "," +
               format_double(r.prediction) + "\n";
    }
    return out;
}

double ks_distance(const std::vector<double>& sorted_xs, const std::function<double(double)>& cdf) {
    const double m = static_cast<double>(sorted_xs.size());
    double dist = 0.0;
    for (std::size_t i = 0; i < sorted_xs.size(); ++i) {
        const double f = cdf(sorted_xs[i]);
        dist = std::max({dist, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
    }
    return dist;
}

SpectrumReport spectrum_experiment(Index n, Index p, int reps, std::uint64_t seed,
                                   unsigned threads) {
    if (n < 1 || p < 1 || reps < 1) {
        throw DomainError("spectrum_experiment: n, p and reps must be positive");
    }
    SpectrumReport out;
    out.n = n;
    out.p = p;
    out.gamma = static_cast<double>(n) / static_cast<double>(p);
    out.upper_edge = mp_edges(out.gamma).second;
    std::vector<Vector> eigs(static_cast<std::size_t>(reps));
    const RngSeed base{seed, 0};
    parallel_for(eigs.size(), threads, [&](std::size_t r) {
        const Matrix x = gen_noise(NoiseSpec::white(), n, p, 1.0, base.child(r));
        const Matrix s = (x.transpose() * x) / static_cast<double>(n);
        eigs[r] = Eigen::SelfAdjointEigenSolver<Matrix>(s, Eigen::EigenvaluesOnly).eigenvalues();
    });
    for (const Vector& e : eigs) {
        out.top.push_back(e(e.size() - 1));
        out.eigenvalues.insert(out.eigenvalues.end(), e.data(), e.data() + e.size());
    }
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
    out.top_mean = std::accumulate(out.top.begin(), out.top.end(), 0.0) /
                   static_cast<double>(out.top.size());
    const double g = out.gamma;
    out.ks = ks_distance(out.eigenvalues, [g](double x) { return mp_cdf(x, g); });
    return out;
}

std::string spectrum_csv(const SpectrumReport& report, std::size_t max_rows) {
    std::string out = "x,ecdf,mp_cdf\n";
    const std::size_t m = report.eigenvalues.size();
    const std::size_t step = std::max<std::size_t>(1, m / std::max<std::size_t>(1, max_rows));
    for (std::size_t i = step - 1; i < m; i += step) {
        const double x = report.eigenvalues[i];
        out += format_double(x) + "," +
               format_double(static_cast<double>(i + 1) / static_cast<double>(m)) + "," +
               format_double(mp_cdf(x, report.gamma)) + "\n";
    }
    return out;
}

}  // namespace lowrankcv
