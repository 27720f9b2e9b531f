// sae: command-line front end for the stable autoencoding library.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sae/harness.hpp"
#include "sae/io.hpp"
#include "sae/sae.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr std::uint64_t kDefaultSeed = 20240601;

/// A flag combination the parser cannot reject by itself.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

CLI::Validator open_interval(double lo, double hi)
{
    const std::string range = "(" + sae::format_double(lo) + ", " + sae::format_double(hi) + ")";
    return CLI::Validator(
        [=](std::string& s) -> std::string {
            try {
                const double v = std::stod(s);
                return v > lo && v < hi ? std::string() : "value must lie in " + range;
            } catch (const std::exception&) {
                return "not a number: " + s;
            }
        },
        "in " + range);
}

std::optional<std::uint64_t> env_seed()
{
    const char* s = std::getenv("SAE_SEED");
    if (!s || !*s) {
        return std::nullopt;
    }
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != std::string(s).size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string("SAE_SEED is not an unsigned integer: ") + s);
    }
}

std::optional<bool> tristate(bool yes, bool no, const char* name)
{
    if (yes && no) {
        throw UsageError(std::string("--") + name + " and --no-" + name + " are mutually exclusive");
    }
    if (yes) {
        return true;
    }
    if (no) {
        return false;
    }
    return std::nullopt;
}

std::string sidecar_path(const std::string& out)
{
    std::filesystem::path p(out);
    return (p.parent_path() / (p.stem().string() + ".diag.json")).string();
}

void write_json(const std::string& path, const nlohmann::json& j)
{
    std::ofstream out(path);
    if (!out) {
        throw sae::invalid_input("cannot write " + path);
    }
    out << j.dump(2) << '\n';
}

struct InputFlags {
    std::string path;
    std::string format = "auto";
    bool header = false, no_header = false, labels = false, no_labels = false;

    void add(CLI::App* cmd)
    {
        cmd->add_option("--in", path, "Input matrix (CSV or MatrixMarket)")->required();
        cmd->add_option("--format", format, "Input format")->check(CLI::IsMember({"auto", "csv", "mm"}));
        cmd->add_flag("--header", header, "CSV has a header row");
        cmd->add_flag("--no-header", no_header, "CSV has no header row");
        cmd->add_flag("--labels", labels, "CSV has a row-label column");
        cmd->add_flag("--no-labels", no_labels, "CSV has no row-label column");
    }

    sae::LabeledMatrix read() const
    {
        sae::ReadOptions opts;
        opts.format = sae::parse_matrix_format(format);
        opts.header = tristate(header, no_header, "header");
        opts.labels = tristate(labels, no_labels, "labels");
        return sae::read_matrix(path, opts);
    }
};

// ---------------------------------------------------------------- denoise

struct DenoiseArgs {
    InputFlags input;
    std::string method;
    std::string noise;
    std::optional<double> sigma2;
    double delta = 0.5;
    std::optional<long> rank;
    int max_iter = 500;
    double tol = 1e-9;
    double rank_tol = 1e-7;
    std::string ln_scale = "sigma2";
    std::string out;
};

int run_denoise(const DenoiseArgs& a)
{
    const std::string& m = a.method;
    const bool needs_rank = m == "sa" || m == "tsvd-k" || m == "ln";
    const bool needs_noise = m == "sa" || m == "isa";
    if (needs_rank && !a.rank) {
        throw UsageError("--rank is required for --method " + m);
    }
    if (needs_noise && a.noise.empty()) {
        throw UsageError("--noise is required for --method " + m);
    }
    if (needs_noise && a.noise == "gaussian" && !a.sigma2) {
        throw UsageError("--sigma2 is required with --noise gaussian");
    }
    if (a.sigma2 && !(*a.sigma2 > 0.0)) {
        throw UsageError("--sigma2 must be positive");
    }

    const auto in = a.input.read();
    const sae::Matrix& X = in.values;
    const sae::Index k = a.rank ? static_cast<sae::Index>(*a.rank) : 0;

    sae::IsaConfig cfg;
    cfg.max_iterations = a.max_iter;
    cfg.convergence_tolerance = a.tol;
    cfg.rank_tolerance = a.rank_tol;

    nlohmann::json diag;
    diag["method"] = m;
    diag["input"] = a.input.path;
    diag["rows"] = X.rows();
    diag["cols"] = X.cols();

    sae::EstimateResult<double> result;
    if (needs_noise) {
        const auto model = a.noise == "gaussian" ? sae::NoiseModel::gaussian(*a.sigma2, a.delta)
                                                 : sae::NoiseModel::poisson(a.delta);
        diag["noise"] = a.noise;
        diag["delta"] = a.delta;
        if (a.noise == "gaussian") {
            diag["sigma2"] = *a.sigma2;
        }
        if (m == "sa") {
            diag["rank"] = k;
            result = sae::stable_autoencoder(X, model, k);
        } else {
            diag["max_iterations"] = cfg.max_iterations;
            diag["convergence_tolerance"] = cfg.convergence_tolerance;
            diag["rank_tolerance"] = cfg.rank_tolerance;
            result = sae::iterated_stable_autoencoder(X, model, cfg);
        }
    } else {
        double sigma = 0.0;
        std::string sigma_source = "given";
        if (m != "tsvd-k") {
            if (a.sigma2) {
                sigma = std::sqrt(*a.sigma2);
            } else if (m == "ln") {
                sigma = std::sqrt(sae::estimate_sigma_residual(X, k));
                sigma_source = "residual";
            } else {
                sigma = sae::estimate_sigma_mp(X);
                sigma_source = "marchenko_pastur_median";
            }
            diag["sigma2"] = sigma * sigma;
            diag["sigma_source"] = sigma_source;
        }
        if (m == "tsvd-k") {
            result.mu_hat = sae::tsvd_k(X, k);
        } else if (m == "tsvd-tau") {
            result.mu_hat = sae::tsvd_tau(X, sigma);
        } else if (m == "asymp") {
            result.mu_hat = sae::asymp(X, sigma);
        } else if (m == "ln") {
            diag["ln_scale"] = a.ln_scale;
            result.mu_hat = sae::ln_shrink(X, k, sigma, sae::parse_ln_scale(a.ln_scale));
        } else {
            const auto s = sae::svst_sure(X, sigma);
            diag["tau"] = s.tau;
            diag["sure"] = s.sure;
            result.mu_hat = s.estimate;
        }
        if (needs_rank) {
            diag["rank"] = k;
        }
        result.iterations = 1;
        const double d1 = sae::singular_values(X)[0];
        result.effective_rank = sae::rank_of_spectrum(sae::singular_values(result.mu_hat), a.rank_tol, d1);
    }

    diag["effective_rank"] = result.effective_rank;
    diag["iterations"] = result.iterations;
    diag["final_residual"] = result.final_residual;
    if (m == "isa") {
        diag["converged"] = result.final_residual < cfg.convergence_tolerance;
    }

    sae::write_matrix_csv(a.out, result.mu_hat, in.row_labels, in.col_labels);
    write_json(sidecar_path(a.out), diag);
    std::cout << "wrote " << a.out << " (effective rank " << result.effective_rank << ", " << result.iterations
              << " iteration" << (result.iterations == 1 ? "" : "s") << ")\n";
    return 0;
}

// ---------------------------------------------------------------- ca

struct CaArgs {
    InputFlags input;
    std::string regularize = "none";
    double delta = 0.5;
    std::optional<long> rank;
    bool drop_empty = false;
    int max_iter = 500;
    double tol = 1e-9;
    std::string out_prefix;
};

std::vector<std::string> pick(const std::vector<std::string>& labels, const std::vector<sae::Index>& idx)
{
    if (labels.empty()) {
        return {};
    }
    std::vector<std::string> out;
    for (auto i : idx) {
        out.push_back(labels[static_cast<std::size_t>(i)]);
    }
    return out;
}

int run_ca(const CaArgs& a)
{
    if (a.regularize != "isa" && !a.rank) {
        throw UsageError("--rank is required with --regularize " + a.regularize);
    }
    auto in = a.input.read();
    sae::Matrix X = in.values;
    nlohmann::json summary;
    if (a.drop_empty) {
        const auto idx = sae::non_empty_margins(X);
        summary["dropped_rows"] = X.rows() - static_cast<sae::Index>(idx.rows.size());
        summary["dropped_cols"] = X.cols() - static_cast<sae::Index>(idx.cols.size());
        X = sae::select(X, idx);
        in.row_labels = pick(in.row_labels, idx.rows);
        in.col_labels = pick(in.col_labels, idx.cols);
    }

    const auto dec = sae::ca_transform(X);
    sae::IsaConfig cfg;
    cfg.max_iterations = a.max_iter;
    cfg.convergence_tolerance = a.tol;

    sae::CaResult<double> fit;
    const sae::Index k = a.rank ? static_cast<sae::Index>(*a.rank) : 0;
    if (a.regularize == "none") {
        fit = sae::ca_plain(X, k);
    } else if (a.regularize == "sa") {
        fit = sae::ca_stable(X, k, a.delta);
    } else {
        fit = sae::ca_isa(X, a.delta, cfg);
    }
    const sae::Index dims = a.rank ? k : fit.effective_rank;
    const auto coords = sae::ca_coordinates(fit.M_hat, dec, dims);

    const std::string& p = a.out_prefix;
    sae::write_matrix_csv(p + "_mu.csv", fit.mu_hat, in.row_labels, in.col_labels);
    sae::write_matrix_csv(p + "_M.csv", fit.M_hat, in.row_labels, in.col_labels);
    sae::write_matrix_csv(p + "_rows.csv", coords.rows, in.row_labels);
    sae::write_matrix_csv(p + "_cols.csv", coords.cols, in.col_labels);

    const double chi2 = dec.N * dec.M.squaredNorm();
    summary["regularize"] = a.regularize;
    summary["chi_square"] = chi2;
    summary["total"] = dec.N;
    summary["rows"] = X.rows();
    summary["cols"] = X.cols();
    if (a.regularize != "none") {
        summary["delta"] = a.delta;
    }
    if (a.rank) {
        summary["rank"] = k;
    }
    summary["effective_rank"] = fit.effective_rank;
    summary["iterations"] = fit.iterations;
    summary["final_residual"] = fit.final_residual;
    summary["singular_values"] = std::vector<double>(coords.singular_values.data(),
                                                     coords.singular_values.data() + coords.singular_values.size());
    write_json(p + "_summary.json", summary);

    std::cout << "chi-square " << sae::format_double(chi2) << ", effective rank " << fit.effective_rank << '\n';
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    int threads = 0;
    std::string out;
};

int run_simulate(const SimulateArgs& a)
{
    auto cfg = sae::load_study_config(a.config);
    if (a.seed) {
        cfg.base_seed = *a.seed;
    } else if (!cfg.base_seed_given) {
        cfg.base_seed = env_seed().value_or(kDefaultSeed);
    }
    if (a.replications) {
        cfg.replications = *a.replications;
    }
    const auto report = sae::run_study(cfg, a.threads);
    if (!a.out.empty()) {
        std::ofstream out(a.out);
        if (!out) {
            throw sae::invalid_input("cannot write " + a.out);
        }
        sae::write_report_csv(report, out);
    }
    sae::write_report_table(report, std::cout);
    return 0;
}

// ---------------------------------------------------------------- cv

struct CvArgs {
    InputFlags input;
    std::string noise;
    std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    double holdout = 0.1;
    int folds = 5;
    std::optional<std::uint64_t> seed;
    std::string method = "isa";
    std::optional<long> rank;
    std::optional<double> sigma2;
    std::string out;
};

int run_cv(const CvArgs& a)
{
    if (a.method == "sa" && !a.rank) {
        throw UsageError("--rank is required for --method sa");
    }
    const auto in = a.input.read();
    sae::CvOptions opts;
    opts.method = a.method == "sa" ? sae::CvMethod::sa : sae::CvMethod::isa;
    opts.rank = a.rank ? static_cast<sae::Index>(*a.rank) : 0;
    opts.sigma2 = a.sigma2;
    const std::uint64_t seed = a.seed ? *a.seed : env_seed().value_or(kDefaultSeed);
    const auto kind = a.noise == "gaussian" ? sae::NoiseKind::gaussian : sae::NoiseKind::poisson;

    const auto res = sae::cross_validate_delta(in.values, kind, a.grid, a.holdout, a.folds, seed, opts);

    std::cout << "delta,holdout_error\n";
    for (std::size_t g = 0; g < res.grid.size(); ++g) {
        std::cout << sae::format_double(res.grid[g]) << ',' << sae::format_double(res.errors[g]) << '\n';
    }
    std::cout << "best_delta " << sae::format_double(res.best_delta) << '\n';

    if (!a.out.empty()) {
        nlohmann::json j;
        j["best_delta"] = res.best_delta;
        j["grid"] = res.grid;
        j["errors"] = res.errors;
        j["seed"] = seed;
        j["folds"] = a.folds;
        j["holdout"] = a.holdout;
        j["method"] = a.method;
        j["noise"] = a.noise;
        write_json(a.out, j);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Regularised low-rank matrix estimation by stable autoencoding"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "sae 1.0.0");

    const std::vector<std::string> methods{"sa", "isa", "tsvd-k", "tsvd-tau", "asymp", "ln", "svst"};

    DenoiseArgs den;
    auto* denoise = app.add_subcommand("denoise", "Estimate a low-rank mean from one noisy matrix");
    den.input.add(denoise);
    denoise->add_option("--method", den.method, "Estimator")->required()->check(CLI::IsMember(methods));
    denoise->add_option("--noise", den.noise, "Bootstrap noise model (sa, isa)")
        ->check(CLI::IsMember({"gaussian", "poisson"}));
    denoise->add_option("--sigma2", den.sigma2, "Noise variance; estimated from the data when omitted for shrinkers");
    denoise->add_option("--delta", den.delta, "Bootstrap deletion fraction")->check(open_interval(0.0, 1.0));
    denoise->add_option("--rank", den.rank, "Target rank (sa, tsvd-k, ln)")->check(CLI::PositiveNumber);
    denoise->add_option("--max-iter", den.max_iter, "ISA iteration cap")->check(CLI::PositiveNumber);
    denoise->add_option("--tol", den.tol, "ISA convergence tolerance")->check(CLI::PositiveNumber);
    denoise->add_option("--rank-tol", den.rank_tol, "Relative singular-value cutoff for the effective rank")
        ->check(CLI::PositiveNumber);
    denoise->add_option("--ln-scale", den.ln_scale, "LN shrinker scale")->check(CLI::IsMember({"sigma2", "n_sigma2"}));
    denoise->add_option("--out", den.out, "Output CSV; diagnostics go to <stem>.diag.json")->required();

    CaArgs ca;
    auto* cacmd = app.add_subcommand("ca", "Correspondence analysis of a count table");
    ca.input.add(cacmd);
    cacmd->add_option("--regularize", ca.regularize, "Regularisation")->check(CLI::IsMember({"none", "sa", "isa"}));
    cacmd->add_option("--delta", ca.delta, "Bootstrap deletion fraction")->check(open_interval(0.0, 1.0));
    cacmd->add_option("--rank", ca.rank, "Rank (required unless --regularize isa)")->check(CLI::PositiveNumber);
    cacmd->add_flag("--drop-empty", ca.drop_empty, "Drop all-zero rows and columns first");
    cacmd->add_option("--max-iter", ca.max_iter, "ISA iteration cap")->check(CLI::PositiveNumber);
    cacmd->add_option("--tol", ca.tol, "ISA convergence tolerance")->check(CLI::PositiveNumber);
    cacmd->add_option("--out-prefix", ca.out_prefix, "Prefix for the output files")->required();

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run a Monte-Carlo study from a JSON config");
    simulate->add_option("--config", sim.config, "Study config (JSON)")->required()->check(CLI::ExistingFile);
    simulate->add_option("--seed", sim.seed, "Base seed (overrides the config and SAE_SEED)");
    simulate->add_option("--replications", sim.replications, "Override the replication count")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--threads", sim.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    simulate->add_option("--out", sim.out, "CSV report path");

    CvArgs cv;
    auto* cvcmd = app.add_subcommand("cv", "Cross-validate delta by cell-wise holdout");
    cv.input.add(cvcmd);
    cvcmd->add_option("--noise", cv.noise, "Noise model")->required()->check(CLI::IsMember({"gaussian", "poisson"}));
    cvcmd->add_option("--grid", cv.grid, "Candidate deltas")->delimiter(',')->check(open_interval(0.0, 1.0));
    cvcmd->add_option("--holdout", cv.holdout, "Fraction of cells held out per fold")->check(open_interval(0.0, 0.5));
    cvcmd->add_option("--folds", cv.folds, "Number of folds")->check(CLI::PositiveNumber);
    cvcmd->add_option("--seed", cv.seed, "Seed (overrides SAE_SEED)");
    cvcmd->add_option("--method", cv.method, "Estimator")->check(CLI::IsMember({"isa", "sa"}));
    cvcmd->add_option("--rank", cv.rank, "Rank for --method sa")->check(CLI::PositiveNumber);
    cvcmd->add_option("--sigma2", cv.sigma2, "Pinned noise variance (gaussian)");
    cvcmd->add_option("--out", cv.out, "Optional JSON result path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (denoise->parsed()) {
            return run_denoise(den);
        }
        if (cacmd->parsed()) {
            return run_ca(ca);
        }
        if (simulate->parsed()) {
            return run_simulate(sim);
        }
        return run_cv(cv);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const CLI::App* sub = app.get_subcommands().front();
        std::cerr << sub->help();
        return kExitUsage;
    } catch (const sae::degenerate_margin& e) {
        std::cerr << "degenerate margin: " << e.what() << " (use --drop-empty)\n";
        return kExitNumeric;
    } catch (const sae::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
}
