#ifndef LOWRANKCV_SIM_HARNESS_HPP
#define LOWRANKCV_SIM_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lowrankcv/missing_svd.hpp"
#include "lowrankcv/random_factors.hpp"

/**
 * @file sim_harness.hpp
 * @brief Seeded replicate runner for the rank-estimation, loss-curve and
 * spectrum experiments.
 *
 * Every replicate r draws from `seed.child(r)`; inside a replicate the data
 * use child 0 and method m uses child(1).child(m), with m the stable numeric
 * value of the Method enum. Adding or removing a method therefore never
 * changes another method's draws.
 */

namespace lowrankcv {

enum class Method : int {
    true_pe = 0,
    cv_wold = 1,
    cv_gabriel = 2,
    rcv_wold = 3,
    rcv_gabriel = 4,
    bic1 = 5,
    bic2 = 6,
    bic3 = 7,
};

std::string to_string(Method m);
std::optional<Method> parse_method(const std::string& name);

struct SimConfig {
    std::string name = "custom";
    Index n = 100;
    Index p = 50;
    std::vector<double> strengths;  ///< entries of D
    FactorSpec factor = FactorSpec::gaussian();
    NoiseSpec noise = NoiseSpec::white();
    double sigma2 = 1.0;
    std::vector<Method> methods;
    int replicates = 50;
    std::uint64_t seed = 1;
    Index k_max = 15;
    Index wold_folds = 5;
    Index gabriel_k = 2;
    Index gabriel_l = 2;
    EmOptions em;
    unsigned threads = 1;
};

/// D_weak = diag(10, 9, 8, 7, 6, 5).
std::vector<double> weak_strengths();
/// D_strong = sqrt(n) D_weak.
std::vector<double> strong_strengths(Index n);

/// Names of the built-in designs: {strong,weak}-{gauss,sparse}-{white,heavy,colored}.
std::vector<std::string> preset_names();
/// Built-in design with all eight methods; throws DomainError for unknown names.
SimConfig preset(const std::string& name);

struct ReplicateRecord {
    int replicate = 0;
    Index reference_k = 0;          ///< minimizer of the expected prediction error
    std::vector<Index> chosen;      ///< per method, -1 on failure
    std::vector<std::string> errors;  ///< per method, empty on success
};

struct SimReport {
    SimConfig config;
    std::vector<ReplicateRecord> records;
    /// Per method: offset (chosen - reference) -> count, failures excluded.
    std::vector<std::map<Index, int>> histograms;
    std::vector<int> failures;
    /// Mean and SE over replicates of the expected prediction error curve.
    std::vector<double> pe_mean;
    std::vector<double> pe_se;

    /// Fraction of replicates where `m` hit the reference rank exactly.
    double offset_zero_frequency(Method m) const;
};

/// Throws DomainError on an invalid configuration.
SimReport run_simulation(const SimConfig& config);

/// CSV method, offset, count (failures as offset "failed").
std::string report_csv(const SimReport& report);
/// CSV k, mean, sd, prediction for the expected prediction error curve.
std::string report_curves_csv(const SimReport& report);
/// JSON manifest: configuration echo, seed and library version.
std::string report_manifest(const SimReport& report);

struct LossSweepConfig {
    std::vector<double> gammas{1.0};
    std::vector<double> sizes{4900.0};
    std::vector<double> mu_multipliers{4.0, 2.0, 1.0, 0.5, 0.25};  ///< times the Frobenius cutoff
    int replicates = 100;
    std::uint64_t seed = 1;
    Index k_max = 7;
    double sigma2 = 1.0;
    unsigned threads = 1;
};

struct LossSweepRow {
    double gamma = 1.0;
    double size = 0.0;
    Index n = 0;
    Index p = 0;
    std::string loss;  ///< "frobenius" (p * ME) or "spectral"
    Index k = 0;
    double mean = 0.0;
    double sd = 0.0;
    double prediction = 0.0;
};

/// Monte Carlo losses of truncated SVDs with Haar factors and white noise,
/// next to their limits. n = round(sqrt(s gamma)), p = round(sqrt(s / gamma)).
std::vector<LossSweepRow> loss_sweep(const LossSweepConfig& config);
std::string loss_sweep_csv(const std::vector<LossSweepRow>& rows);

struct SpectrumReport {
    Index n = 0;
    Index p = 0;
    double gamma = 1.0;
    std::vector<double> eigenvalues;  ///< pooled over replicates, sorted
    std::vector<double> top;          ///< largest eigenvalue per replicate
    double ks = 0.0;                  ///< Kolmogorov distance to the limit law
    double top_mean = 0.0;
    double upper_edge = 0.0;
};

/// Eigenvalues of X^T X / n for white Gaussian X (n x p), compared with the
/// Marchenko-Pastur law.
SpectrumReport spectrum_experiment(Index n, Index p, int reps, std::uint64_t seed,
                                   unsigned threads = 1);
/// CSV x, ecdf, mp_cdf at up to `max_rows` evenly spaced order statistics.
std::string spectrum_csv(const SpectrumReport& report, std::size_t max_rows = 1000);

/// Kolmogorov distance between the empirical CDF of sorted `xs` and `cdf`.
double ks_distance(const std::vector<double>& sorted_xs,
                   const std::function<double(double)>& cdf);

}  // namespace lowrankcv

#endif  // LOWRANKCV_SIM_HARNESS_HPP
