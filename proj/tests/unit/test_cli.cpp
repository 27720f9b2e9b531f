#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "sae/harness.hpp"
#include "sae/io.hpp"
#include "sae/sae.hpp"

namespace fs = std::filesystem;
using sae::Matrix;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args)
{
    const std::string cmd = std::string(SAE_CLI_PATH) + " " + args + " 2>&1";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        return r;
    }
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) {
        r.out += buf;
    }
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("sae_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const Matrix& M) const
    {
        sae::write_matrix_csv(path(name), M);
        return path(name);
    }

    static Matrix read(const std::string& p) { return sae::read_matrix(p, {}).values; }

    static nlohmann::json json(const std::string& p)
    {
        std::ifstream in(p);
        return nlohmann::json::parse(in);
    }

    fs::path dir_;
};

Matrix gaussian_data(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const Matrix L = oracle::random_matrix(25, 2, rng);
    const Matrix R = oracle::random_matrix(12, 2, rng);
    return L * R.transpose() + oracle::random_matrix(25, 12, rng);
}

Matrix count_data(std::uint64_t seed)
{
    return sae::gen_poisson_instance(800.0, seed).X;
}

} // namespace

TEST_F(Cli, DenoiseSaMatchesLibrary)
{
    const Matrix X = gaussian_data(1);
    const auto in = write("x.csv", X);
    const auto r = run("denoise --in " + in + " --method sa --noise gaussian --sigma2 1.0 --rank 10 --delta 0.5 --out " +
                       path("mu.csv"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto lib = sae::stable_autoencoder(X, sae::NoiseModel::gaussian(1.0, 0.5), 10);
    EXPECT_EQ(read(path("mu.csv")), lib.mu_hat);
    const auto diag = json(path("mu.diag.json"));
    EXPECT_EQ(diag["effective_rank"], lib.effective_rank);
    EXPECT_EQ(diag["iterations"], 1);
    EXPECT_EQ(diag["rank"], 10);
}

TEST_F(Cli, DenoiseIsaPoissonMatchesLibrary)
{
    const Matrix X = count_data(2);
    const auto in = write("x.csv", X);
    const auto r = run("denoise --in " + in + " --method isa --noise poisson --delta 0.5 --out " + path("mu.csv"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto lib = sae::iterated_stable_autoencoder(X, sae::NoiseModel::poisson(0.5));
    EXPECT_EQ(read(path("mu.csv")), lib.mu_hat);
    const auto diag = json(path("mu.diag.json"));
    EXPECT_EQ(diag["effective_rank"], lib.effective_rank);
    EXPECT_EQ(diag["iterations"], lib.iterations);
    EXPECT_EQ(diag["final_residual"].get<double>(), lib.final_residual);
    EXPECT_TRUE(diag.contains("delta"));
}

TEST_F(Cli, DenoiseShrinkersMatchLibrary)
{
    const Matrix X = gaussian_data(3);
    const auto in = write("x.csv", X);
    const double sigma = 0.9;
    ASSERT_EQ(run("denoise --in " + in + " --method asymp --sigma2 0.81 --out " + path("a.csv")).code, 0);
    EXPECT_EQ(read(path("a.csv")), sae::asymp(X, sigma));
    ASSERT_EQ(run("denoise --in " + in + " --method svst --out " + path("s.csv")).code, 0);
    EXPECT_EQ(read(path("s.csv")), sae::svst_sure(X, sae::estimate_sigma_mp(X)).estimate);
    ASSERT_EQ(run("denoise --in " + in + " --method tsvd-k --rank 2 --out " + path("t.csv")).code, 0);
    EXPECT_EQ(read(path("t.csv")), sae::tsvd_k(X, 2));
    ASSERT_EQ(run("denoise --in " + in + " --method ln --rank 2 --out " + path("l.csv")).code, 0);
    EXPECT_EQ(read(path("l.csv")), sae::ln_shrink(X, 2, std::sqrt(sae::estimate_sigma_residual(X, 2))));
}

TEST_F(Cli, DenoiseUsageErrors)
{
    const auto in = write("x.csv", gaussian_data(4));
    auto r = run("denoise --in " + in + " --method sa --noise gaussian --sigma2 1 --out " + path("mu.csv"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("--rank"), std::string::npos);
    EXPECT_EQ(run("denoise --in " + in + " --method isa --noise gaussian --out " + path("mu.csv")).code, 2);
    EXPECT_EQ(run("denoise --in " + in + " --method isa --out " + path("mu.csv")).code, 2);
    EXPECT_EQ(run("denoise --in " + in + " --method bogus --out " + path("mu.csv")).code, 2);
    EXPECT_EQ(run("denoise --in " + in + " --method isa --noise poisson --delta 1.5 --out " + path("mu.csv")).code, 2);
    EXPECT_FALSE(fs::exists(path("mu.csv")));
}

TEST_F(Cli, DenoiseNumericalErrors)
{
    Matrix X = gaussian_data(5);
    const auto in = write("x.csv", X);
    // negative entries are not counts
    EXPECT_EQ(run("denoise --in " + in + " --method isa --noise poisson --out " + path("mu.csv")).code, 3);
}

TEST_F(Cli, CaIsaMatchesLibrary)
{
    const Matrix X = count_data(6);
    const auto idx = sae::non_empty_margins(X);
    const Matrix Xs = sae::select(X, idx);
    const auto in = write("t.csv", Xs);
    const auto r = run("ca --in " + in + " --regularize isa --delta 0.3 --out-prefix " + path("P"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto lib = sae::ca_isa(Xs, 0.3);
    EXPECT_EQ(read(path("P_mu.csv")), lib.mu_hat);
    EXPECT_EQ(read(path("P_M.csv")), lib.M_hat);
    const auto summary = json(path("P_summary.json"));
    EXPECT_EQ(summary["effective_rank"], lib.effective_rank);
    EXPECT_NEAR(summary["chi_square"].get<double>(), oracle::chi_square(Xs), 1e-9 * oracle::chi_square(Xs));
    const auto coords = sae::ca_coordinates(lib.M_hat, sae::ca_transform(Xs), lib.effective_rank);
    EXPECT_EQ(read(path("P_rows.csv")), coords.rows);
    EXPECT_EQ(read(path("P_cols.csv")), coords.cols);
}

TEST_F(Cli, CaIndependenceTable)
{
    Eigen::VectorXd a(4), b(3);
    a << 1, 2, 3, 4;
    b << 2, 4, 6;
    const auto in = write("t.csv", Matrix(a * b.transpose()));
    const auto r = run("ca --in " + in + " --regularize none --rank 1 --out-prefix " + path("P"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_LT(std::abs(json(path("P_summary.json"))["chi_square"].get<double>()), 1e-20 + 1e-12);
    EXPECT_LT(read(path("P_rows.csv")).cwiseAbs().maxCoeff(), 1e-6);
}

TEST_F(Cli, CaZeroColumn)
{
    Matrix X(3, 3);
    X << 1, 0, 2, 3, 0, 4, 5, 0, 1;
    const auto in = write("t.csv", X);
    const auto r = run("ca --in " + in + " --regularize sa --rank 1 --out-prefix " + path("P"));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.out.find("degenerate margin"), std::string::npos);
    const auto ok = run("ca --in " + in + " --regularize sa --rank 1 --drop-empty --out-prefix " + path("Q"));
    ASSERT_EQ(ok.code, 0) << ok.out;
    Matrix Xs(3, 2);
    Xs << 1, 2, 3, 4, 5, 1;
    EXPECT_EQ(read(path("Q_mu.csv")), sae::ca_stable(Xs, 1, 0.5).mu_hat);
    EXPECT_EQ(json(path("Q_summary.json"))["dropped_cols"], 1);
    EXPECT_EQ(run("ca --in " + in + " --regularize sa --out-prefix " + path("R")).code, 2);
}

TEST_F(Cli, SimulateMatchesLibraryAndHonoursSeed)
{
    const std::string cfg_path = path("study.json");
    std::ofstream(cfg_path) << R"({"scenario": "poisson_tables", "replications": 3, "totals": [400],
                                   "methods": ["tsvd-k", "sa", "isa"]})";
    auto r = run("simulate --config " + cfg_path + " --seed 17 --threads 2 --out " + path("a.csv"));
    ASSERT_EQ(r.code, 0) << r.out;
    auto cfg = sae::load_study_config(cfg_path);
    cfg.base_seed = 17;
    std::ostringstream lib;
    sae::write_report_csv(sae::run_study(cfg, 1), lib);
    std::ifstream in(path("a.csv"));
    std::stringstream cli;
    cli << in.rdbuf();
    EXPECT_EQ(cli.str(), lib.str());

    ASSERT_EQ(run("simulate --config " + cfg_path + " --seed 17 --out " + path("b.csv")).code, 0);
    ASSERT_EQ(run("simulate --config " + cfg_path + " --seed 18 --out " + path("c.csv")).code, 0);
    auto slurp = [](const std::string& p) {
        std::ifstream f(p);
        std::stringstream s;
        s << f.rdbuf();
        return s.str();
    };
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));

    const std::string env_cmd = "env SAE_SEED=18 " + std::string(SAE_CLI_PATH) + " simulate --config " + cfg_path +
                                " --out " + path("d.csv") + " > /dev/null 2>&1";
    ASSERT_EQ(std::system(env_cmd.c_str()), 0);
    EXPECT_EQ(slurp(path("c.csv")), slurp(path("d.csv")));
}

TEST_F(Cli, SimulateBundledGaussianConfig)
{
    const std::string cfg = std::string(SAE_SOURCE_DIR) + "/configs/table1_desk.json";
    const auto r = run("simulate --config " + cfg + " --replications 1 --threads 2 --out " + path("t.csv"));
    ASSERT_EQ(r.code, 0) << r.out;
    std::ifstream in(path("t.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(in, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 8 * 7);
}

TEST_F(Cli, CvMatchesLibrary)
{
    const Matrix X = gaussian_data(7);
    const auto in = write("x.csv", X);
    const auto r =
        run("cv --in " + in + " --noise gaussian --grid 0.2,0.5,0.8 --folds 2 --seed 9 --out " + path("cv.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto lib = sae::cross_validate_delta(X, sae::NoiseKind::gaussian, {0.2, 0.5, 0.8}, 0.1, 2, 9);
    const auto j = json(path("cv.json"));
    EXPECT_EQ(j["best_delta"].get<double>(), lib.best_delta);
    EXPECT_EQ(j["errors"].get<std::vector<double>>(), lib.errors);
    EXPECT_NE(r.out.find("best_delta " + sae::format_double(lib.best_delta)), std::string::npos);

    const auto again = run("cv --in " + in + " --noise gaussian --grid 0.2,0.5,0.8 --folds 2 --seed 9");
    EXPECT_EQ(again.out, run("cv --in " + in + " --noise gaussian --grid 0.2,0.5,0.8 --folds 2 --seed 9").out);

    const auto single = run("cv --in " + in + " --noise gaussian --grid 0.35 --folds 1 --seed 1");
    ASSERT_EQ(single.code, 0);
    EXPECT_NE(single.out.find("best_delta 0.34999999999999998"), std::string::npos);
    EXPECT_EQ(run("cv --in " + in + " --noise gaussian --grid 0,0.5").code, 2);
    EXPECT_EQ(run("cv --in " + in + " --noise gaussian --method sa").code, 2);
}

TEST_F(Cli, MatrixMarketInput)
{
    std::ofstream(path("t.mtx")) << "%%MatrixMarket matrix coordinate integer general\n3 3 5\n1 1 4\n2 2 5\n3 3 6\n1 "
                                    "2 1\n3 1 2\n";
    const auto r = run("ca --in " + path("t.mtx") + " --regularize none --rank 1 --out-prefix " + path("P"));
    ASSERT_EQ(r.code, 0) << r.out;
    Matrix X(3, 3);
    X << 4, 1, 0, 0, 5, 0, 2, 0, 6;
    EXPECT_EQ(read(path("P_mu.csv")), sae::ca_plain(X, 1).mu_hat);
}
