#pragma once

// Instance generators, Monte-Carlo study runner, cross-validation of delta and
// subsampling of count tables.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sae/linalg.hpp"
#include "sae/noise.hpp"
#include "sae/shrinkers.hpp"

namespace sae {

struct GaussianInstance {
    Matrix mu;
    Matrix X;
    double sigma = 0.0;
};

/// mu = L R' rescaled to unit Frobenius norm, X = mu + N(0, sigma^2) with
/// sigma = 1 / (snr sqrt(np)).
GaussianInstance gen_gaussian_instance(Index n, Index p, Index k, double snr, std::uint64_t seed);

/// One rank-1 block of the frozen Poisson signal: a Gaussian bump profile on
/// rows [row_begin, row_end) times one on columns [col_begin, col_end).
struct BumpComponent {
    Index row_begin, row_end;
    double row_center, row_width;
    Index col_begin, col_end;
    double col_center, col_width;
    double singular_value;
};

/// Diffuse, mid-width and corner components with singular values 1.1 : 1.4 : 1.
const std::vector<BumpComponent>& poisson_signal_components();

/// The 50 x 20 rank-3 mean matrix, scaled so its entries sum to total.
Matrix poisson_signal(double total);

struct PoissonInstance {
    Matrix mu;
    Matrix X;
};

PoissonInstance gen_poisson_instance(double total, std::uint64_t seed);

/// Draws n_sub of the sum(X) unit counts uniformly without replacement.
Matrix subsample_counts(const Matrix& X, std::int64_t n_sub, std::uint64_t seed);

enum class Scenario { gaussian_table1, poisson_tables, subsample_stability };

const char* to_string(Scenario s);
Scenario parse_scenario(const std::string& s);

struct StudyConfig {
    Scenario scenario = Scenario::gaussian_table1;
    int replications = 20;
    std::uint64_t base_seed = 20240601;
    bool base_seed_given = false; // set when the config file names a seed
    std::vector<std::string> methods;
    double delta = 0.5;
    LnScale ln_scale = LnScale::sigma2;

    // gaussian_table1
    Index n = 200;
    Index p = 500;
    std::vector<Index> ranks{10};
    std::vector<double> snr{4.0};

    // poisson_tables
    std::vector<double> totals{200.0};
    Index true_rank = 3;

    // subsample_stability
    Matrix table;
    std::string table_path;
    std::int64_t subsample_total = 200;
    Index ca_rank = 2;
    double isa_delta = 0.3;

    void validate() const;
};

/// Reads a JSON study description. A relative table path is resolved against
/// the directory of the config file.
StudyConfig load_study_config(const std::string& path);
StudyConfig parse_study_config(const std::string& json_text, const std::string& base_dir = ".");

std::vector<std::string> default_methods(Scenario s);

struct StudyRow {
    std::string scenario;
    std::optional<Index> k;
    std::optional<double> snr;
    std::optional<double> total;
    std::string method;
    double mse_mean = 0.0;
    std::optional<double> rv_row_mean;
    std::optional<double> rv_col_mean;
    double rank_mean = 0.0;
    int replications = 0; // runs that completed
    int rv_runs = 0;      // runs entering the RV means
    int failures = 0;
    std::uint64_t seed = 0;
};

struct StudyReport {
    std::vector<StudyRow> rows;

    const StudyRow* find(const std::string& method, std::optional<double> snr, std::optional<Index> k,
                         std::optional<double> total) const;
};

/// threads <= 0 uses the hardware concurrency. The report does not depend on
/// the thread count.
StudyReport run_study(const StudyConfig& cfg, int threads = 0);

void write_report_csv(const StudyReport& report, std::ostream& out);
void write_report_table(const StudyReport& report, std::ostream& out);

enum class CvMethod { isa, sa };

struct CvOptions {
    CvMethod method = CvMethod::isa;
    Index rank = 0;                 // required for sa
    std::optional<double> sigma2;   // gaussian: pinned noise variance
    int em_passes = 30;
    double em_tolerance = 1e-6;
    IsaConfig isa{};
};

struct CvResult {
    double best_delta = 0.0;
    std::vector<double> grid;
    std::vector<double> errors; // mean holdout squared error per grid point
};

/// Cell-wise cross-validation of delta. Each fold hides a random fraction of
/// cells, fills them with an additive row + column fit, re-imputes them with
/// the estimator until stable, and scores the hidden cells.
CvResult cross_validate_delta(const Matrix& X, NoiseKind kind, const std::vector<double>& grid, double holdout_fraction,
                              int folds, std::uint64_t seed, const CvOptions& options = {});

} // namespace sae
