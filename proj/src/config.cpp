#include "stopflow/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "stopflow/errors.hpp"

namespace stopflow {

namespace {

bool is_model_key(const std::string& key) {
    return std::any_of(std::begin(kModelKeys), std::end(kModelKeys),
                       [&](const char* k) { return key == k; });
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double& slot(ModelParams& p, const std::string& key) {
    if (key == "mu") return p.mu;
    if (key == "sigma") return p.sigma;
    if (key == "rho") return p.rho;
    if (key == "kappa") return p.kappa;
    if (key == "lambda") return p.lambda;
    return p.theta;
}

}  // namespace

std::map<std::string, double> parse_config_text(const std::string& text,
                                                const std::string& origin) {
    std::map<std::string, double> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::string where = origin + ":" + std::to_string(lineno);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(where + ": expected key=value, got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!is_model_key(key)) throw ValidationError(where + ": unknown key '" + key + "'");
        if (out.count(key)) throw ValidationError(where + ": key '" + key + "' given twice");

        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(value.c_str(), &end);
        if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
            throw ValidationError(where + ": value of '" + key + "' is not a number: '" +
                                  value + "'");
        }
        out[key] = v;
    }
    return out;
}

std::map<std::string, double> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    if (in.bad()) throw IoError("error reading config file " + path.string());
    return parse_config_text(text.str(), path.string());
}

ModelParams resolve_params(const std::optional<std::filesystem::path>& config_file,
                           const std::map<std::string, double>& flag_values) {
    for (const auto& [key, value] : flag_values) {
        if (!is_model_key(key)) throw ValidationError("unknown model key '" + key + "'");
    }
    ModelParams p;
    std::map<std::string, double> merged;
    if (config_file) merged = read_config_file(*config_file);
    for (const auto& [key, value] : flag_values) merged[key] = value;

    if (config_file) {
        std::string missing;
        for (const char* key : kModelKeys) {
            if (!merged.count(key)) missing += (missing.empty() ? "" : ", ") + std::string(key);
        }
        if (!missing.empty()) {
            throw ValidationError(config_file->string() + ": missing key(s): " + missing);
        }
    }
    for (const auto& [key, value] : merged) slot(p, key) = value;
    return validate(p);
}

}  // namespace stopflow
