#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lowrankcv/cli.hpp"
#include "lowrankcv/matrix_io.hpp"
#include "lowrankcv/random_factors.hpp"

using namespace lowrankcv;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "lowrankcv_cli_test") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string last_line(const std::string& s) {
    const auto end = s.find_last_not_of('\n');
    const auto start = s.rfind('\n', end);
    return s.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
}

}  // namespace

TEST_SUITE("oracle") {
    TEST_CASE("spiked table") {
        const Run r = run({"oracle", "spiked", "--gamma", "1", "--sigma2", "1", "--mu", "4"});
        CHECK(r.code == 0);
        CHECK(r.out.find("1,4,6.25,0.75,0.75,") != std::string::npos);
        CHECK(r.out.find("frob_cutoff,3\n") != std::string::npos);
    }

    TEST_CASE("bcv plan") {
        const Run r = run({"oracle", "bcv-plan", "--gamma", "1"});
        CHECK(r.code == 0);
        CHECK(r.out.find("rho_star,0.2222") != std::string::npos);
        CHECK(r.out.find("k_sym,1.8918") != std::string::npos);
    }

    TEST_CASE("marchenko-pastur edges") {
        const Run r = run({"oracle", "mp", "--gamma", "4"});
        CHECK(r.code == 0);
        CHECK(r.out == "edges,0.25,2.25\n");
    }

    TEST_CASE("bad numerics exit with a usage code") {
        CHECK(run({"oracle", "spiked", "--gamma", "-1", "--mu", "4"}).code == 2);
        CHECK(run({"oracle", "spiked", "--gamma", "1", "--mu", "4,abc"}).code == 2);
        CHECK(run({"oracle", "mp", "--gamma", "x"}).code == 2);
    }
}

TEST_SUITE("cv") {
    TEST_CASE("noiseless rank-1 input picks rank one") {
        TempDir dir;
        const Matrix a = gen_noise(NoiseSpec::white(), 20, 1, 1.0, RngSeed{1, 0});
        const Matrix b = gen_noise(NoiseSpec::white(), 1, 12, 1.0, RngSeed{2, 0});
        write_matrix(dir.file("r1.csv"), a * b);
        const Run r = run({"cv", dir.file("r1.csv"), "--style", "gabriel", "--folds", "2,2",
                           "--kmax", "3", "--seed", "7"});
        CHECK(r.code == 0);
        CHECK(last_line(r.out) == "chosen_k=1");
    }

    TEST_CASE("same seed gives identical files") {
        TempDir dir;
        write_matrix(dir.file("x.txt"), gen_noise(NoiseSpec::white(), 15, 10, 1.0, RngSeed{3, 0}));
        for (const std::string style : {"wold", "gabriel"}) {
            const std::vector<std::string> base{"cv", dir.file("x.txt"), "--style", style, "--kmax", "3",
                                                "--seed", "42", "--rotate"};
            auto a = base;
            a.insert(a.end(), {"--out", dir.file("a.csv")});
            auto b = base;
            b.insert(b.end(), {"--out", dir.file("b.csv"), "--threads", "2"});
            CHECK(run(a).code == 0);
            CHECK(run(b).code == 0);
            CHECK(read_file(dir.file("a.csv")) == read_file(dir.file("b.csv")));
        }
    }

    TEST_CASE("naive style warns on stderr") {
        TempDir dir;
        write_matrix(dir.file("x.csv"), gen_noise(NoiseSpec::white(), 12, 6, 1.0, RngSeed{4, 0}));
        const Run r = run({"cv", dir.file("x.csv"), "--style", "naive", "--seed", "1"});
        CHECK(r.code == 0);
        CHECK(r.err.find("nonincreasing") != std::string::npos);
        CHECK(r.out.find("warning") == std::string::npos);
    }

    TEST_CASE("missing values") {
        TempDir dir;
        {
            std::ofstream f(dir.file("na.txt"));
            f << "3 3\n1 2 3\n2 NA 6\n3 6 9\n";
        }
        CHECK(run({"cv", dir.file("na.txt"), "--style", "gabriel", "--seed", "1"}).code == 2);
        CHECK(run({"cv", dir.file("na.txt"), "--style", "naive", "--seed", "1"}).code == 2);
        const Run r = run({"cv", dir.file("na.txt"), "--style", "wold", "--folds", "3", "--kmax",
                           "1", "--seed", "1"});
        CHECK(r.code == 0);
    }

    TEST_CASE("unseeded runs report the seed they used") {
        TempDir dir;
        write_matrix(dir.file("x.csv"), gen_noise(NoiseSpec::white(), 10, 6, 1.0, RngSeed{5, 0}));
        const Run r = run({"cv", dir.file("x.csv"), "--style", "gabriel", "--kmax", "2"});
        CHECK(r.code == 0);
        CHECK(r.err.find("seed=") != std::string::npos);
    }

    TEST_CASE("errors") {
        CHECK(run({"cv", "/nonexistent/file.csv"}).code == 1);
        CHECK(run({"cv"}).code == 2);
        CHECK(run({"cv", "x.csv", "--bogus"}).code == 2);
        CHECK(run({"frobnicate"}).code == 2);
    }
}

TEST_SUITE("complete, rank, sim") {
    TEST_CASE("rank-1 completion") {
        TempDir dir;
        {
            std::ofstream f(dir.file("m.txt"));
            f << "2 2\n1 2\n2 NA\n";
        }
        const Run r = run({"complete", dir.file("m.txt"), "--rank", "1", "--tol", "1e-12",
                           "--max-iter", "5000", "--out", dir.file("out.txt"), "--trace",
                           dir.file("trace.csv")});
        CHECK(r.code == 0);
        const MaskedMatrix m = read_matrix(dir.file("out.txt"));
        CHECK(m.fully_observed());
        CHECK(std::abs(m.values()(1, 1) - 4.0) <= 1e-4);
        CHECK(read_file(dir.file("trace.csv")).rfind("iteration,rss\n1,", 0) == 0);
    }

    TEST_CASE("rank criteria") {
        TempDir dir;
        int zero = 0;
        for (std::uint64_t s = 0; s < 5; ++s) {
            write_matrix(dir.file("w.csv"),
                         gen_noise(NoiseSpec::white(), 100, 100, 1.0, RngSeed{60 + s, 0}));
            const Run r = run({"rank", dir.file("w.csv"), "--method", "bic1", "--kmax", "5"});
            CHECK(r.code == 0);
            zero += last_line(r.out) == "chosen_k=0" ? 1 : 0;
        }
        CHECK(zero >= 4);
        const Run s = run({"rank", dir.file("w.csv"), "--method", "scree-data", "--kmax", "2"});
        CHECK(s.out.rfind("k,bic1,bic2,bic3,scree\n", 0) == 0);
        CHECK(run({"rank", dir.file("w.csv"), "--method", "aic"}).code == 2);
    }

    TEST_CASE("simulation outputs") {
        TempDir dir;
        const Run r = run({"sim", "--preset", "strong-gauss-white", "--reps", "2", "--seed", "3",
                           "--methods", "true_pe,bic3", "--kmax", "8", "--out-dir",
                           dir.file("sim")});
        CHECK(r.code == 0);
        CHECK(fs::exists(dir.path / "sim" / "report.csv"));
        CHECK(fs::exists(dir.path / "sim" / "curves.csv"));
        CHECK(fs::exists(dir.path / "sim" / "manifest.json"));
        CHECK(r.out.find("true_pe,0,2") != std::string::npos);
    }

    TEST_CASE("unknown preset lists the valid ones") {
        const Run r = run({"sim", "--preset", "nope"});
        CHECK(r.code == 2);
        CHECK(r.err.find("weak-sparse-colored") != std::string::npos);
    }

    TEST_CASE("help succeeds") {
        const Run r = run({"--help"});
        CHECK(r.code == 0);
        CHECK(r.out.find("oracle") != std::string::npos);
    }
}
