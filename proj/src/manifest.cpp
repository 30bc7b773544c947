#include "stopflow/manifest.hpp"

#include <fstream>
#include <json.hpp>

#include "stopflow/errors.hpp"
#include "stopflow/report.hpp"

namespace stopflow {

using nlohmann::json;

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
    json params = {{"mu", fmt17(m.params.mu)},         {"sigma", fmt17(m.params.sigma)},
                   {"rho", fmt17(m.params.rho)},       {"kappa", fmt17(m.params.kappa)},
                   {"lambda", fmt17(m.params.lambda)}, {"theta", fmt17(m.params.theta)}};
    json j = {{"command", m.command},
              {"version", m.version},
              {"params", params},
              {"seed", m.seed},
              {"threads", m.threads},
              {"options", m.options},
              {"artifacts", m.artifacts},
              {"duration_s", m.duration_s}};

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("error writing manifest " + path.string());
}

RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read manifest " + path.string());
    try {
        const json j = json::parse(in);
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.version = j.at("version").get<std::string>();
        const json& p = j.at("params");
        auto num = [&](const char* key) { return std::stod(p.at(key).get<std::string>()); };
        m.params = {num("mu"), num("sigma"), num("rho"), num("kappa"), num("lambda"), num("theta")};
        m.seed = j.at("seed").get<std::uint64_t>();
        m.threads = j.at("threads").get<unsigned>();
        m.options = j.at("options").get<std::map<std::string, std::string>>();
        m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
        m.duration_s = j.at("duration_s").get<double>();
        return m;
    } catch (const json::exception& e) {
        throw IoError("malformed manifest " + path.string() + ": " + e.what());
    } catch (const std::logic_error& e) {
        throw IoError("malformed manifest " + path.string() + ": " + e.what());
    }
}

}  // namespace stopflow
