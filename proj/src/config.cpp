#include "scarcealloc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "scarcealloc/errors.hpp"

namespace scarcealloc {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& value, const std::string& key, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + value + "'",
                          line);
    }
}

long long parse_int(const std::string& value, const std::string& key, int line) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'",
                          line);
    }
}

std::uint64_t parse_seed(const std::string& value, const std::string& key, int line) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a seed integer, got '" + value +
                              "'",
                          line);
    }
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

Resource& resource_slot(ExperimentConfig& config, std::size_t index) {
    auto& resources = config.cohort.resources;
    while (resources.size() <= index) {
        Resource r;
        r.id = static_cast<int>(resources.size());
        r.name = "resource_" + std::to_string(resources.size());
        r.capacity = 0;
        r.risk_reduction_factor = 1.0;
        resources.push_back(r);
    }
    return resources[index];
}

} // namespace

bool is_known_policy(const std::string& name) {
    return name == "greedy" || name == "threshold" || name == "random" ||
           name == "exact";
}

ExperimentConfig ExperimentConfig::defaults() { return {}; }

void ExperimentConfig::validate() const {
    cohort.validate();
    if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
    if (threshold < 0.0 || threshold > 1.0)
        throw ValidationError("threshold must be in [0, 1]");
    if (n_runs < 1) throw ValidationError("n_runs must be >= 1");
    if (!(severity_quantile > 0.0) || !(severity_quantile < 1.0))
        throw ValidationError("severity_quantile must be in (0, 1)");
    if (!(auroc_tolerance > 0.0))
        throw ValidationError("auroc_tolerance must be > 0");
    if (recalibration_bins < 2)
        throw ValidationError("recalibration_bins must be >= 2");
    if (policies.empty()) throw ValidationError("policies must not be empty");
    for (const auto& p : policies)
        if (!is_known_policy(p))
            throw ValidationError("unknown policy name '" + p + "'");
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig config;
    bool seed_from_file = false;

    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        raw = trim(raw);
        if (raw.empty()) continue;
        const auto eq = raw.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key=value, got '" + raw + "'", line);
        const std::string key = trim(raw.substr(0, eq));
        const std::string value = trim(raw.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line);

        if (key == "cohort.n_patients") {
            config.cohort.n_patients = static_cast<int>(parse_int(value, key, line));
        } else if (key == "cohort.severity_shape") {
            config.cohort.severity_shape = parse_double(value, key, line);
        } else if (key == "cohort.severity_scale") {
            config.cohort.severity_scale = parse_double(value, key, line);
        } else if (key == "cohort.risk_alpha") {
            config.cohort.risk_alpha = parse_double(value, key, line);
        } else if (key == "cohort.risk_beta") {
            config.cohort.risk_beta = parse_double(value, key, line);
        } else if (key == "cohort.target_auroc") {
            config.cohort.target_auroc = parse_double(value, key, line);
        } else if (key.rfind("resource.", 0) == 0) {
            const auto rest = key.substr(9);
            const auto dot = rest.find('.');
            if (dot == std::string::npos)
                throw ConfigError("resource keys look like resource.<k>.<field>", line);
            const long long idx = parse_int(rest.substr(0, dot), key, line);
            if (idx < 0 || idx > 63)
                throw ConfigError("resource index out of range", line);
            Resource& r = resource_slot(config, static_cast<std::size_t>(idx));
            const std::string field = rest.substr(dot + 1);
            if (field == "name") {
                r.name = value;
            } else if (field == "capacity") {
                r.capacity = static_cast<int>(parse_int(value, key, line));
            } else if (field == "risk_reduction") {
                r.risk_reduction_factor = parse_double(value, key, line);
            } else {
                throw ConfigError("unknown resource field '" + field + "'", line);
            }
        } else if (key == "lambda") {
            config.lambda = parse_double(value, key, line);
        } else if (key == "threshold") {
            config.threshold = parse_double(value, key, line);
        } else if (key == "policies") {
            config.policies = split_list(value);
        } else if (key == "n_runs") {
            config.n_runs = static_cast<int>(parse_int(value, key, line));
        } else if (key == "root_seed") {
            config.root_seed = parse_seed(value, key, line);
            seed_from_file = true;
        } else if (key == "severity_quantile") {
            config.severity_quantile = parse_double(value, key, line);
        } else if (key == "auroc_tolerance") {
            config.auroc_tolerance = parse_double(value, key, line);
        } else if (key == "recalibration_bins") {
            config.recalibration_bins = static_cast<int>(parse_int(value, key, line));
        } else if (key == "penalty_mode") {
            if (value == "patient") {
                config.penalty_mode = PenaltyMode::UnallocatedPatients;
            } else if (value == "per_resource") {
                config.penalty_mode = PenaltyMode::PerResourceShortfall;
            } else {
                throw ConfigError("penalty_mode must be 'patient' or 'per_resource'",
                                  line);
            }
        } else {
            throw ConfigError("unknown key '" + key + "'", line);
        }
    }

    if (!seed_from_file) {
        if (const char* env = std::getenv(kSeedEnvVar); env && *env) {
            try {
                config.root_seed = parse_seed(env, kSeedEnvVar, 0);
            } catch (const ConfigError&) {
                throw ValidationError(std::string(kSeedEnvVar) +
                                      " must be an unsigned integer");
            }
        }
    }

    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string config_to_string(const ExperimentConfig& config) {
    std::ostringstream out;
    out.precision(17);
    out << "cohort.n_patients=" << config.cohort.n_patients << '\n'
        << "cohort.severity_shape=" << config.cohort.severity_shape << '\n'
        << "cohort.severity_scale=" << config.cohort.severity_scale << '\n'
        << "cohort.risk_alpha=" << config.cohort.risk_alpha << '\n'
        << "cohort.risk_beta=" << config.cohort.risk_beta << '\n'
        << "cohort.target_auroc=" << config.cohort.target_auroc << '\n';
    for (std::size_t j = 0; j < config.cohort.resources.size(); ++j) {
        const Resource& r = config.cohort.resources[j];
        out << "resource." << j << ".name=" << r.name << '\n'
            << "resource." << j << ".capacity=" << r.capacity << '\n'
            << "resource." << j << ".risk_reduction=" << r.risk_reduction_factor << '\n';
    }
    out << "lambda=" << config.lambda << '\n'
        << "threshold=" << config.threshold << '\n'
        << "policies=";
    for (std::size_t i = 0; i < config.policies.size(); ++i) {
        if (i) out << ',';
        out << config.policies[i];
    }
    out << '\n'
        << "n_runs=" << config.n_runs << '\n'
        << "root_seed=" << config.root_seed << '\n'
        << "severity_quantile=" << config.severity_quantile << '\n'
        << "auroc_tolerance=" << config.auroc_tolerance << '\n'
        << "recalibration_bins=" << config.recalibration_bins << '\n'
        << "penalty_mode="
        << (config.penalty_mode == PenaltyMode::UnallocatedPatients ? "patient"
                                                                    : "per_resource")
        << '\n';
    return out.str();
}

} // namespace scarcealloc
