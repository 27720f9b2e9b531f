#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "sae/ca.hpp"
#include "sae/estimators.hpp"
#include "sae/harness.hpp"
#include "sae/metrics.hpp"
#include "sae/random.hpp"
#include "sae/shrinkers.hpp"

namespace sae {

namespace {

struct Outcome {
    bool ok = false;
    double mse = 0.0;
    double rank = 0.0;
    bool rv_ok = false;
    double rv_row = 0.0;
    double rv_col = 0.0;
};

struct Cell {
    std::optional<Index> k;
    std::optional<double> snr;
    std::optional<double> total;
};

struct Reference {
    Matrix U; // top singular vectors (or principal coordinates) of the truth
    Matrix V;
};

constexpr double kRankTol = 1e-7;

Reference reference_vectors(const Matrix& mu, Index k)
{
    const auto f = svd(mu);
    return {f.U.leftCols(k), f.V.leftCols(k)};
}

Outcome score_estimate(const Matrix& est, const Matrix& mu, double d1_X, const Reference& ref, Index k)
{
    Outcome o;
    o.ok = true;
    o.mse = relative_mse(est, mu);
    const auto f = svd(est);
    o.rank = static_cast<double>(rank_of_spectrum(f.d, kRankTol, d1_X));
    if (o.rank >= static_cast<double>(k)) {
        o.rv_ok = true;
        o.rv_row = rv_coefficient(ref.U, f.U.leftCols(k));
        o.rv_col = rv_coefficient(ref.V, f.V.leftCols(k));
    }
    return o;
}

Matrix run_matrix_method(const std::string& method, const Matrix& X, Index k, const NoiseModel& model,
                         double sigma_fixed, double sigma_ln, LnScale ln_scale)
{
    if (method == "tsvd-k") {
        return tsvd_k(X, k);
    }
    if (method == "tsvd-tau") {
        return tsvd_tau(X, sigma_fixed);
    }
    if (method == "asymp") {
        return asymp(X, sigma_fixed);
    }
    if (method == "svst") {
        return svst_sure(X, sigma_fixed).estimate;
    }
    if (method == "ln") {
        return ln_shrink(X, k, sigma_ln, ln_scale);
    }
    if (method == "sa") {
        return stable_autoencoder(X, model, k).mu_hat;
    }
    if (method == "isa") {
        return iterated_stable_autoencoder(X, model).mu_hat;
    }
    throw invalid_input("unknown method '" + method + "'");
}

std::vector<Outcome> replicate_gaussian(const StudyConfig& cfg, const Cell& cell, std::uint64_t seed)
{
    const Index k = *cell.k;
    const auto inst = gen_gaussian_instance(cfg.n, cfg.p, k, *cell.snr, seed);
    const double d1 = singular_values(inst.X)[0];
    const Reference ref = reference_vectors(inst.mu, k);
    const auto model = NoiseModel::gaussian(inst.sigma * inst.sigma, cfg.delta);

    std::vector<Outcome> out;
    for (const auto& m : cfg.methods) {
        try {
            const Matrix est = run_matrix_method(m, inst.X, k, model, inst.sigma, inst.sigma, cfg.ln_scale);
            out.push_back(score_estimate(est, inst.mu, d1, ref, k));
        } catch (const error&) {
            out.push_back({});
        }
    }
    return out;
}

std::vector<Outcome> replicate_poisson(const StudyConfig& cfg, const Cell& cell, std::uint64_t seed)
{
    const Index k = cfg.true_rank;
    const double total = *cell.total;
    const auto inst = gen_poisson_instance(total, seed);
    const double d1 = singular_values(inst.X)[0];
    const Reference ref = reference_vectors(inst.mu, k);
    const auto model = NoiseModel::poisson(cfg.delta);

    double sigma_mp = 0.0;
    double sigma_ln = 0.0;
    std::vector<Outcome> out;
    for (const auto& m : cfg.methods) {
        try {
            if ((m == "tsvd-tau" || m == "asymp" || m == "svst") && sigma_mp == 0.0) {
                sigma_mp = estimate_sigma_mp(inst.X);
            }
            if (m == "ln" && sigma_ln == 0.0) {
                sigma_ln = std::sqrt(estimate_sigma_residual(inst.X, k));
            }
            const Matrix est = run_matrix_method(m, inst.X, k, model, sigma_mp, sigma_ln, cfg.ln_scale);
            // Reported on the normalised scale mu / N; the relative error is unchanged.
            out.push_back(score_estimate(est / total, inst.mu / total, d1 / total, {ref.U, ref.V}, k));
        } catch (const error&) {
            out.push_back({});
        }
    }
    return out;
}

struct SubsamplePopulation {
    Matrix table;
    CaCoordinates<double> coords;
};

std::vector<Outcome> replicate_subsample(const StudyConfig& cfg, const SubsamplePopulation& pop, std::uint64_t seed)
{
    const Matrix Xs = subsample_counts(pop.table, cfg.subsample_total, seed);
    const auto idx = non_empty_margins(Xs);
    const Matrix X = select(Xs, idx);
    const Matrix expected = select(pop.table, idx) * (static_cast<double>(cfg.subsample_total) / pop.table.sum());
    const auto dec = ca_transform(X);
    const Index k = std::min<Index>(cfg.ca_rank, std::min(X.rows(), X.cols()) - 1);

    Matrix ref_rows(static_cast<Index>(idx.rows.size()), pop.coords.rows.cols());
    for (std::size_t i = 0; i < idx.rows.size(); ++i) {
        ref_rows.row(static_cast<Index>(i)) = pop.coords.rows.row(idx.rows[i]);
    }
    Matrix ref_cols(static_cast<Index>(idx.cols.size()), pop.coords.cols.cols());
    for (std::size_t j = 0; j < idx.cols.size(); ++j) {
        ref_cols.row(static_cast<Index>(j)) = pop.coords.cols.row(idx.cols[j]);
    }

    std::vector<Outcome> out;
    for (const auto& m : cfg.methods) {
        try {
            Matrix M_hat;
            double rank = 0.0;
            if (m == "ca") {
                M_hat = ca_plain(X, k).M_hat;
            } else if (m == "sa") {
                M_hat = ca_stable(X, k, cfg.delta).M_hat;
            } else if (m == "isa") {
                const auto r = ca_isa(X, cfg.isa_delta);
                M_hat = r.M_hat;
                rank = static_cast<double>(r.effective_rank);
            } else if (m == "ln") {
                const double s2 = estimate_sigma_residual(dec.M, k);
                M_hat = ln_shrink(dec.M, k, std::sqrt(s2), cfg.ln_scale);
            } else {
                throw invalid_input("unknown subsample method '" + m + "'");
            }
            const double top = singular_values(dec.M)[0];
            if (m != "isa") {
                rank = static_cast<double>(rank_of_spectrum(singular_values(M_hat), kRankTol, top));
            }

            Outcome o;
            o.ok = true;
            o.rank = rank;
            o.mse = relative_mse(ca_restore(M_hat, dec), expected);
            o.rv_ok = true;
            const Index used = std::min<Index>(k, static_cast<Index>(rank));
            if (used > 0) {
                const auto c = ca_coordinates(M_hat, dec, used);
                o.rv_row = rv_coefficient(ref_rows, c.rows);
                o.rv_col = rv_coefficient(ref_cols, c.cols);
            }
            out.push_back(o);
        } catch (const error&) {
            out.push_back({});
        }
    }
    return out;
}

std::vector<Cell> study_cells(const StudyConfig& cfg)
{
    std::vector<Cell> cells;
    switch (cfg.scenario) {
    case Scenario::gaussian_table1:
        for (Index k : cfg.ranks) {
            for (double s : cfg.snr) {
                cells.push_back({k, s, std::nullopt});
            }
        }
        break;
    case Scenario::poisson_tables:
        for (double t : cfg.totals) {
            cells.push_back({cfg.true_rank, std::nullopt, t});
        }
        break;
    case Scenario::subsample_stability:
        cells.push_back({cfg.ca_rank, std::nullopt, static_cast<double>(cfg.subsample_total)});
        break;
    }
    return cells;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body)
{
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                body(i);
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
}

} // namespace

const StudyRow* StudyReport::find(const std::string& method, std::optional<double> snr, std::optional<Index> k,
                                  std::optional<double> total) const
{
    for (const auto& row : rows) {
        if (row.method == method && row.snr == snr && row.k == k && row.total == total) {
            return &row;
        }
    }
    return nullptr;
}

StudyReport run_study(const StudyConfig& cfg, int threads)
{
    cfg.validate();
    const auto cells = study_cells(cfg);
    const std::size_t reps = static_cast<std::size_t>(cfg.replications);

    SubsamplePopulation pop;
    if (cfg.scenario == Scenario::subsample_stability) {
        pop.table = cfg.table;
        const auto dec = ca_transform(pop.table);
        pop.coords = ca_coordinates(dec.M, dec, cfg.ca_rank);
    }

    std::vector<std::vector<Outcome>> results(cells.size() * reps);
    parallel_for(results.size(), threads, [&](std::size_t task) {
        const std::size_t c = task / reps;
        const std::size_t r = task % reps;
        const std::uint64_t seed = derive_seed(cfg.base_seed, c, r);
        switch (cfg.scenario) {
        case Scenario::gaussian_table1:
            results[task] = replicate_gaussian(cfg, cells[c], seed);
            break;
        case Scenario::poisson_tables:
            results[task] = replicate_poisson(cfg, cells[c], seed);
            break;
        case Scenario::subsample_stability:
            results[task] = replicate_subsample(cfg, pop, seed);
            break;
        }
    });

    StudyReport report;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
            StudyRow row;
            row.scenario = to_string(cfg.scenario);
            row.k = cells[c].k;
            row.snr = cells[c].snr;
            row.total = cells[c].total;
            row.method = cfg.methods[m];
            row.seed = cfg.base_seed;
            double mse = 0.0, rank = 0.0, rv_row = 0.0, rv_col = 0.0;
            for (std::size_t r = 0; r < reps; ++r) {
                const Outcome& o = results[c * reps + r][m];
                if (!o.ok) {
                    ++row.failures;
                    continue;
                }
                ++row.replications;
                mse += o.mse;
                rank += o.rank;
                if (o.rv_ok) {
                    ++row.rv_runs;
                    rv_row += o.rv_row;
                    rv_col += o.rv_col;
                }
            }
            if (row.replications > 0) {
                row.mse_mean = mse / row.replications;
                row.rank_mean = rank / row.replications;
            } else {
                row.mse_mean = std::nan("");
                row.rank_mean = std::nan("");
            }
            if (row.rv_runs > 0) {
                row.rv_row_mean = rv_row / row.rv_runs;
                row.rv_col_mean = rv_col / row.rv_runs;
            }
            report.rows.push_back(row);
        }
    }
    return report;
}

} // namespace sae
