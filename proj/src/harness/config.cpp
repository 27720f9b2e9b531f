#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sae/harness.hpp"
#include "sae/io.hpp"

namespace sae {

namespace {

const std::vector<std::string>& known_methods(Scenario s)
{
    static const std::vector<std::string> gaussian{"tsvd-k", "tsvd-tau", "asymp", "svst", "ln", "sa", "isa"};
    static const std::vector<std::string> poisson{"tsvd-k", "tsvd-tau", "asymp", "ln", "sa", "isa"};
    static const std::vector<std::string> subsample{"ca", "ln", "sa", "isa"};
    switch (s) {
    case Scenario::gaussian_table1:
        return gaussian;
    case Scenario::poisson_tables:
        return poisson;
    case Scenario::subsample_stability:
        break;
    }
    return subsample;
}

} // namespace

const char* to_string(Scenario s)
{
    switch (s) {
    case Scenario::gaussian_table1:
        return "gaussian_table1";
    case Scenario::poisson_tables:
        return "poisson_tables";
    case Scenario::subsample_stability:
        break;
    }
    return "subsample_stability";
}

Scenario parse_scenario(const std::string& s)
{
    for (Scenario v : {Scenario::gaussian_table1, Scenario::poisson_tables, Scenario::subsample_stability}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    throw invalid_input("unknown scenario '" + s + "'");
}

std::vector<std::string> default_methods(Scenario s)
{
    return known_methods(s);
}

void StudyConfig::validate() const
{
    detail::require(replications >= 1, "replications must be at least 1");
    detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    detail::require(!methods.empty(), "method list is empty");
    const auto& known = known_methods(scenario);
    for (const auto& m : methods) {
        detail::require(std::find(known.begin(), known.end(), m) != known.end(),
                        "method '" + m + "' is not available for scenario " + to_string(scenario));
    }
    switch (scenario) {
    case Scenario::gaussian_table1:
        detail::require(!ranks.empty() && !snr.empty(), "gaussian study needs non-empty ranks and snr grids");
        for (Index k : ranks) {
            detail::require(k >= 1 && k <= std::min(n, p), "gaussian study rank out of range");
        }
        for (double s : snr) {
            detail::require(s > 0.0, "snr values must be positive");
        }
        break;
    case Scenario::poisson_tables:
        detail::require(!totals.empty(), "poisson study needs a non-empty totals grid");
        for (double t : totals) {
            detail::require(t > 0.0, "totals must be positive");
        }
        break;
    case Scenario::subsample_stability:
        detail::require(table.size() > 0, "subsample study needs a table");
        detail::require(subsample_total >= 1 && static_cast<double>(subsample_total) <= table.sum(),
                        "subsample_total must lie in [1, sum(table)]");
        detail::require(ca_rank >= 1, "ca_rank must be at least 1");
        detail::require(isa_delta > 0.0 && isa_delta < 1.0, "isa_delta must lie in (0, 1)");
        break;
    }
}

StudyConfig parse_study_config(const std::string& json_text, const std::string& base_dir)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input(std::string("config is not valid JSON: ") + e.what());
    }

    try {
        StudyConfig cfg;
        cfg.scenario = parse_scenario(j.at("scenario").get<std::string>());
        cfg.replications = j.value("replications", cfg.replications);
        cfg.base_seed_given = j.contains("base_seed");
        cfg.base_seed = j.value("base_seed", cfg.base_seed);
        cfg.methods = j.value("methods", default_methods(cfg.scenario));
        cfg.delta = j.value("delta", cfg.delta);
        cfg.ln_scale = parse_ln_scale(j.value("ln_scale", std::string("sigma2")));

        cfg.n = j.value("n", cfg.n);
        cfg.p = j.value("p", cfg.p);
        cfg.ranks = j.value("ranks", cfg.ranks);
        cfg.snr = j.value("snr", cfg.snr);

        cfg.totals = j.value("totals", cfg.totals);
        cfg.true_rank = j.value("true_rank", cfg.true_rank);

        cfg.subsample_total = j.value("subsample_total", cfg.subsample_total);
        cfg.ca_rank = j.value("ca_rank", cfg.ca_rank);
        cfg.isa_delta = j.value("isa_delta", cfg.isa_delta);
        if (j.contains("table")) {
            std::filesystem::path path = j.at("table").get<std::string>();
            if (path.is_relative()) {
                path = std::filesystem::path(base_dir) / path;
            }
            cfg.table_path = path.lexically_normal().string();
            cfg.table = read_matrix(cfg.table_path, ReadOptions{}).values;
        }
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input(std::string("bad config field: ") + e.what());
    }
}

StudyConfig load_study_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw invalid_input("cannot open config file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_study_config(buf.str(), std::filesystem::path(path).parent_path().string());
}

} // namespace sae
