#include "lowrankcv/cli.hpp"

#include <filesystem>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "lowrankcv/cv_engine.hpp"
#include "lowrankcv/matrix_io.hpp"
#include "lowrankcv/missing_svd.hpp"
#include "lowrankcv/parallel.hpp"
#include "lowrankcv/rank_select.hpp"
#include "lowrankcv/rmt_oracle.hpp"
#include "lowrankcv/sim_harness.hpp"

namespace lowrankcv {

namespace {

struct UsageError : Error {
    using Error::Error;
};

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) {
                throw std::invalid_argument(tok);
            }
        } catch (const std::exception&) {
            throw UsageError("not a number: '" + tok + "'");
        }
    }
    if (out.empty()) {
        throw UsageError("empty number list");
    }
    return out;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed, std::ostream& err) {
    if (seed) {
        return *seed;
    }
    std::random_device rd;
    const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    err << "seed=" << s << "\n";
    return s;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty()) {
        out << content;
    } else {
        write_file_atomic(path, content);
    }
}

// oracle --------------------------------------------------------------------

struct OracleArgs {
    double gamma = 1.0;
    double sigma2 = 1.0;
    std::string mus;
    std::string folds = "2,2";
};

void cmd_oracle_spiked(const OracleArgs& a, std::ostream& out) {
    const SpikedModel model(a.gamma, a.sigma2, parse_list(a.mus));
    const SpikedLimits lim = spiked_limits(model);
    out << "i,mu,mu_bar,theta2,phi2,alpha,above_threshold,shrunk_d\n";
    for (std::size_t i = 0; i < model.factors(); ++i) {
        const auto& f = lim.factors[i];
        const double mu = model.mus()[i];
        out << i + 1 << "," << format_double(mu) << "," << format_double(f.mu_bar) << ","
            << format_double(f.theta2) << "," << format_double(f.phi2) << ","
            << format_double(frob_alpha(mu, a.gamma, a.sigma2)) << ","
            << (f.above_threshold ? 1 : 0) << ","
            << format_double(shrink(std::sqrt(f.mu_bar), a.gamma, a.sigma2)) << "\n";
    }
    out << "frob_cutoff," << format_double(frob_cutoff(a.gamma, a.sigma2)) << "\n";
    out << "detection_threshold," << format_double(model.detection_threshold()) << "\n";
    out << "bulk_edge," << format_double(model.bulk_edge()) << "\n";
}

void cmd_oracle_bcv_plan(const OracleArgs& a, std::ostream& out) {
    const BcvFoldPlan plan = bcv_plan(a.gamma);
    out << "rho_star," << format_double(plan.rho_star) << "\n";
    out << "k_sym," << format_double(plan.k_sym) << "\n";
}

void cmd_oracle_bcv_bias(const OracleArgs& a, std::ostream& out) {
    const std::vector<double> folds = parse_list(a.folds);
    if (folds.size() != 2) {
        throw UsageError("--folds expects K,L");
    }
    const SpikedModel model(a.gamma, a.sigma2, parse_list(a.mus));
    const BcvPlan plan = bcv_bias(model, folds[0], folds[1]);
    out << "rho," << format_double(plan.rho) << "\n";
    out << "gamma1," << format_double(plan.gamma1) << "\n";
    out << "eta," << format_double(plan.eta) << "\n";
    out << "i,mu,beta,beta_mu\n";
    for (std::size_t i = 0; i < plan.betas.size(); ++i) {
        const double mu = model.mus()[i];
        out << i + 1 << "," << format_double(mu) << "," << format_double(plan.betas[i]) << ","
            << format_double(plan.betas[i] * mu) << "\n";
    }
}

void cmd_oracle_mp(const OracleArgs& a, const std::string& xs, std::ostream& out) {
    const auto [lo, hi] = mp_edges(a.gamma);
    out << "edges," << format_double(lo) << "," << format_double(hi) << "\n";
    if (!xs.empty()) {
        out << "x,pdf,cdf\n";
        for (const double x : parse_list(xs)) {
            out << format_double(x) << "," << format_double(mp_pdf(x, a.gamma)) << ","
                << format_double(mp_cdf(x, a.gamma)) << "\n";
        }
    }
}

// cv ------------------------------------------------------------------------

struct CvArgs {
    std::string input;
    std::string style = "wold";
    std::string folds;
    bool rotate = false;
    Index k_max = -1;
    std::optional<std::uint64_t> seed;
    std::string sigma2;
    std::string out_path;
    double tol = 1e-4;
    int max_iter = 500;
};

void cmd_cv(const CvArgs& a, unsigned threads, std::ostream& out, std::ostream& err) {
    MaskedMatrix data = read_matrix(a.input);
    const Index n = data.rows();
    const Index p = data.cols();
    if (a.style != "wold" && !data.fully_observed()) {
        throw UsageError("--style " + a.style + " needs complete data; input has NA entries");
    }
    const std::uint64_t seed = resolve_seed(a.seed, err);
    const RngSeed base{seed, 0};
    Matrix x = data.fully_observed() ? data.values() : Matrix();
    if (a.rotate) {
        if (!data.fully_observed()) {
            throw UsageError("--rotate needs complete data");
        }
        x = rotated(x, base.child(2)).x;
        data = MaskedMatrix::complete(x);
    }
    const Index r = std::min(n, p);
    CvCurve curve;
    if (a.style == "wold") {
        const std::vector<double> f = a.folds.empty() ? std::vector<double>{5} : parse_list(a.folds);
        if (f.size() != 1) {
            throw UsageError("wold --folds expects a single K");
        }
        const Index k_max = a.k_max >= 0 ? a.k_max : std::min<Index>(r - 1, 10);
        EmOptions em;
        em.tol = a.tol;
        em.max_iter = a.max_iter;
        curve = wold_pe(data, wold_plan(n, p, static_cast<Index>(f[0]), base.child(0)), k_max, em,
                        threads);
    } else if (a.style == "gabriel") {
        const std::vector<double> f = a.folds.empty() ? std::vector<double>{2, 2} : parse_list(a.folds);
        if (f.size() != 2) {
            throw UsageError("gabriel --folds expects K,L");
        }
        const Index k_max = a.k_max >= 0 ? a.k_max : std::min<Index>(r - 1, 10);
        curve = gabriel_pe(x, gabriel_plan(n, p, static_cast<Index>(f[0]), static_cast<Index>(f[1]),
                                           base.child(1)),
                           k_max, threads);
    } else if (a.style == "naive") {
        err << "warning: the naive row hold-out curve is nonincreasing in k by construction and "
               "cannot select a rank\n";
        CounterRng rng(base.child(3));
        std::vector<Index> test;
        for (Index i = 0; i < n; ++i) {
            if (rng.uniform() < 0.5) {
                test.push_back(i);
            }
        }
        if (test.empty() || static_cast<Index>(test.size()) == n) {
            test = {0};
        }
        const Index k_max = a.k_max >= 0 ? a.k_max : std::min<Index>(p, 10);
        curve = naive_rowwise_pe(x, test, k_max);
    } else {
        throw UsageError("--style must be wold, gabriel or naive");
    }
    const Index chosen = curve.argmin();
    if (!a.sigma2.empty()) {
        const double s2 = a.sigma2 == "auto" ? estimate_sigma2(data.filled_with(
                                                   Matrix::Zero(n, p)), std::min(chosen, r - 1))
                                             : parse_list(a.sigma2).at(0);
        err << "sigma2_hat=" << format_double(s2) << "\n";
        curve = me_curve(curve, s2);
    }
    emit(a.out_path, curve_csv(curve), out);
    out << "chosen_k=" << chosen << "\n";
}

// complete ------------------------------------------------------------------

struct CompleteArgs {
    std::string input;
    Index rank = 1;
    double tol = 1e-4;
    int max_iter = 500;
    std::string out_path;
    std::string trace_path;
};

void cmd_complete(const CompleteArgs& a, std::ostream& out, std::ostream& err) {
    const MaskedMatrix data = read_matrix(a.input);
    EmOptions em;
    em.tol = a.tol;
    em.max_iter = a.max_iter;
    const EmResult res = em_svd(data, a.rank, em);
    const Matrix completed = data.filled_with(res.completion);
    if (a.out_path.empty()) {
        out << format_matrix_text(completed);
    } else {
        write_matrix(a.out_path, completed);
    }
    std::string trace = "iteration,rss\n";
    for (std::size_t i = 0; i < res.rss_trace.size(); ++i) {
        trace += std::to_string(i + 1) + "," + format_double(res.rss_trace[i]) + "\n";
    }
    if (!a.trace_path.empty()) {
        write_file_atomic(a.trace_path, trace);
    }
    err << "iterations=" << res.iterations << " converged=" << (res.converged ? 1 : 0)
        << " rss=" << format_double(res.rss_trace.back()) << "\n";
}

// rank ----------------------------------------------------------------------

struct RankArgs {
    std::string input;
    std::string method = "bic3";
    Index k_max = -1;
    std::string out_path;
};

void cmd_rank(const RankArgs& a, std::ostream& out) {
    const MaskedMatrix data = read_matrix(a.input);
    if (!data.fully_observed()) {
        throw UsageError("rank needs complete data; input has NA entries");
    }
    const Matrix& x = data.values();
    const Index r = std::min(x.rows(), x.cols());
    const Index k_max = a.k_max >= 0 ? a.k_max : r - 1;
    if (a.method == "scree-data") {
        emit(a.out_path, criterion_csv(x, k_max), out);
        return;
    }
    const BicCurves b = bic_curves(x, k_max);
    const std::vector<double>* crit = nullptr;
    if (a.method == "bic1") {
        crit = &b.bic1;
    } else if (a.method == "bic2") {
        crit = &b.bic2;
    } else if (a.method == "bic3") {
        crit = &b.bic3;
    } else {
        throw UsageError("--method must be bic1, bic2, bic3 or scree-data");
    }
    emit(a.out_path, criterion_csv(x, k_max), out);
    out << "chosen_k=" << pick_rank(*crit, a.method).chosen_k << "\n";
}

// sim -----------------------------------------------------------------------

struct SimArgs {
    std::string preset;
    int reps = 50;
    std::optional<std::uint64_t> seed;
    Index k_max = -1;
    std::string methods;
    std::string out_dir;
};

void cmd_sim(const SimArgs& a, unsigned threads, std::ostream& out, std::ostream& err) {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), a.preset) == names.end()) {
        std::string list;
        for (const auto& nm : names) {
            list += "\n  " + nm;
        }
        throw UsageError("unknown preset '" + a.preset + "'; available presets:" + list);
    }
    SimConfig c = preset(a.preset);
    c.replicates = a.reps;
    c.seed = resolve_seed(a.seed, err);
    c.threads = threads;
    if (a.k_max >= 0) {
        c.k_max = a.k_max;
    }
    if (!a.methods.empty()) {
        c.methods.clear();
        std::stringstream ss(a.methods);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const auto m = parse_method(tok);
            if (!m) {
                throw UsageError("unknown method '" + tok + "'");
            }
            c.methods.push_back(*m);
        }
    }
    const SimReport report = run_simulation(c);
    if (a.out_dir.empty()) {
        out << report_csv(report);
        return;
    }
    std::filesystem::create_directories(a.out_dir);
    const std::filesystem::path dir(a.out_dir);
    write_file_atomic((dir / "report.csv").string(), report_csv(report));
    write_file_atomic((dir / "curves.csv").string(), report_curves_csv(report));
    write_file_atomic((dir / "manifest.json").string(), report_manifest(report));
    out << report_csv(report);
}

struct SweepArgs {
    std::string gammas = "1";
    std::string sizes = "4900";
    int reps = 100;
    std::optional<std::uint64_t> seed;
    Index k_max = 7;
    std::string out_path;
};

void cmd_loss_sweep(const SweepArgs& a, unsigned threads, std::ostream& out, std::ostream& err) {
    LossSweepConfig c;
    c.gammas = parse_list(a.gammas);
    c.sizes = parse_list(a.sizes);
    c.replicates = a.reps;
    c.seed = resolve_seed(a.seed, err);
    c.k_max = a.k_max;
    c.threads = threads;
    emit(a.out_path, loss_sweep_csv(loss_sweep(c)), out);
}

struct SpectrumArgs {
    Index n = 1000;
    Index p = 1000;
    int reps = 1;
    std::optional<std::uint64_t> seed;
    std::string out_path;
};

void cmd_spectrum(const SpectrumArgs& a, unsigned threads, std::ostream& out, std::ostream& err) {
    const SpectrumReport rep = spectrum_experiment(a.n, a.p, a.reps, resolve_seed(a.seed, err), threads);
    emit(a.out_path, spectrum_csv(rep), out);
    err << "ks=" << format_double(rep.ks) << " top_mean=" << format_double(rep.top_mean)
        << " upper_edge=" << format_double(rep.upper_edge) << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rank selection for truncated SVDs: oracles, cross-validation, simulations"};
    app.name("lowrankcv");
    app.require_subcommand(1);
    app.fallthrough();
    int threads_flag = 0;
    app.add_option("--threads", threads_flag, "Worker threads (default: LOWRANKCV_THREADS or all cores)")
        ->check(CLI::PositiveNumber);

    OracleArgs oracle;
    std::string mp_xs;
    auto* oracle_cmd = app.add_subcommand("oracle", "Closed-form limits");
    oracle_cmd->require_subcommand(1);
    auto* spiked_cmd = oracle_cmd->add_subcommand("spiked", "Spiked-model limits and penalties");
    spiked_cmd->add_option("--gamma", oracle.gamma, "n / p")->required();
    spiked_cmd->add_option("--sigma2", oracle.sigma2, "Noise variance");
    spiked_cmd->add_option("--mu", oracle.mus, "Factor strengths, comma separated")->required();
    auto* plan_cmd = oracle_cmd->add_subcommand("bcv-plan", "Held-in fraction and symmetric folds");
    plan_cmd->add_option("--gamma", oracle.gamma, "n / p")->required();
    auto* bias_cmd = oracle_cmd->add_subcommand("bcv-bias", "Expected BCV model-error bias");
    bias_cmd->add_option("--gamma", oracle.gamma, "n / p")->required();
    bias_cmd->add_option("--sigma2", oracle.sigma2, "Noise variance");
    bias_cmd->add_option("--mu", oracle.mus, "Factor strengths, comma separated")->required();
    bias_cmd->add_option("--folds", oracle.folds, "K,L");
    auto* mp_cmd = oracle_cmd->add_subcommand("mp", "Marchenko-Pastur edges, density and CDF");
    mp_cmd->add_option("--gamma", oracle.gamma, "n / p")->required();
    mp_cmd->add_option("--x", mp_xs, "Evaluation points, comma separated");

    CvArgs cv;
    auto* cv_cmd = app.add_subcommand("cv", "Cross-validated prediction error curve");
    cv_cmd->add_option("input", cv.input, "Matrix file (.csv or text)")->required();
    cv_cmd->add_option("--style", cv.style, "wold, gabriel or naive");
    cv_cmd->add_option("--folds", cv.folds, "K for wold, K,L for gabriel");
    cv_cmd->add_flag("--rotate", cv.rotate, "Randomly rotate rows and columns first");
    cv_cmd->add_option("--kmax", cv.k_max, "Largest rank");
    cv_cmd->add_option("--seed", cv.seed, "Random seed");
    cv_cmd->add_option("--sigma2", cv.sigma2, "auto or a value; output model error instead");
    cv_cmd->add_option("--tol", cv.tol, "EM tolerance");
    cv_cmd->add_option("--max-iter", cv.max_iter, "EM iteration cap");
    cv_cmd->add_option("--out", cv.out_path, "Curve CSV path (default stdout)");

    CompleteArgs complete;
    auto* complete_cmd = app.add_subcommand("complete", "Fill NA entries by rank-k EM SVD");
    complete_cmd->add_option("input", complete.input, "Matrix file with NA entries")->required();
    complete_cmd->add_option("--rank", complete.rank, "Rank k")->required();
    complete_cmd->add_option("--tol", complete.tol, "Relative RSS tolerance");
    complete_cmd->add_option("--max-iter", complete.max_iter, "Iteration cap");
    complete_cmd->add_option("--out", complete.out_path, "Completed matrix path (default stdout)");
    complete_cmd->add_option("--trace", complete.trace_path, "RSS trace CSV path");

    RankArgs rank;
    auto* rank_cmd = app.add_subcommand("rank", "Penalized rank criteria and scree values");
    rank_cmd->add_option("input", rank.input, "Matrix file")->required();
    rank_cmd->add_option("--method", rank.method, "bic1, bic2, bic3 or scree-data");
    rank_cmd->add_option("--kmax", rank.k_max, "Largest rank");
    rank_cmd->add_option("--out", rank.out_path, "Criterion CSV path (default stdout)");

    SimArgs sim;
    auto* sim_cmd = app.add_subcommand("sim", "Rank-estimation simulation from a preset design");
    sim_cmd->add_option("--preset", sim.preset, "Design name")->required();
    sim_cmd->add_option("--reps", sim.reps, "Replicates")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim.seed, "Master seed");
    sim_cmd->add_option("--kmax", sim.k_max, "Largest rank");
    sim_cmd->add_option("--methods", sim.methods, "Comma-separated subset of methods");
    sim_cmd->add_option("--out-dir", sim.out_dir, "Directory for report, curves and manifest");

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("loss-sweep", "Simulated truncation losses vs limits");
    sweep_cmd->add_option("--gamma", sweep.gammas, "Aspect ratios, comma separated");
    sweep_cmd->add_option("--size", sweep.sizes, "Sizes n*p, comma separated");
    sweep_cmd->add_option("--reps", sweep.reps, "Replicates")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--seed", sweep.seed, "Master seed");
    sweep_cmd->add_option("--kmax", sweep.k_max, "Largest rank");
    sweep_cmd->add_option("--out", sweep.out_path, "CSV path (default stdout)");

    SpectrumArgs spectrum;
    auto* spectrum_cmd = app.add_subcommand("spectrum", "White-noise spectrum vs the limit law");
    spectrum_cmd->add_option("--n", spectrum.n, "Rows");
    spectrum_cmd->add_option("--p", spectrum.p, "Columns");
    spectrum_cmd->add_option("--reps", spectrum.reps, "Replicates")->check(CLI::PositiveNumber);
    spectrum_cmd->add_option("--seed", spectrum.seed, "Master seed");
    spectrum_cmd->add_option("--out", spectrum.out_path, "CSV path (default stdout)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return kExitUsage;
    }

    const unsigned threads = threads_flag > 0 ? static_cast<unsigned>(threads_flag) : default_threads();
    try {
        if (*oracle_cmd) {
            if (*spiked_cmd) {
                cmd_oracle_spiked(oracle, out);
            } else if (*plan_cmd) {
                cmd_oracle_bcv_plan(oracle, out);
            } else if (*bias_cmd) {
                cmd_oracle_bcv_bias(oracle, out);
            } else {
                cmd_oracle_mp(oracle, mp_xs, out);
            }
        } else if (*cv_cmd) {
            cmd_cv(cv, threads, out, err);
        } else if (*complete_cmd) {
            cmd_complete(complete, out, err);
        } else if (*rank_cmd) {
            cmd_rank(rank, out);
        } else if (*sim_cmd) {
            cmd_sim(sim, threads, out, err);
        } else if (*sweep_cmd) {
            cmd_loss_sweep(sweep, threads, out, err);
        } else if (*spectrum_cmd) {
            cmd_spectrum(spectrum, threads, out, err);
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitOk;
}

}  // namespace lowrankcv
