#include "qsdlab/report.hpp"

#include "qsdlab/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

namespace qsd {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string RunManifest::hash() const {
    nlohmann::ordered_json j;
    j["artifact_version"] = kArtifactVersion;
    j["subcommand"] = subcommand;
    j["model_digest"] = model_digest;
    j["parameters"] = parameters;
    j["seed"] = seed;
    return fnv1a_hex(j.dump());
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["artifact_version"] = kArtifactVersion;
    j["subcommand"] = subcommand;
    j["model"] = model;
    j["model_digest"] = model_digest;
    j["parameters"] = parameters;
    j["seed"] = seed;
    j["threads"] = threads;
    j["outputs"] = outputs;
    j["hash"] = hash();
    j["wall_clock_seconds"] = wall_clock_seconds;
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
    RunManifest m;
    try {
        const auto j = nlohmann::json::parse(text);
        m.subcommand = j.at("subcommand").get<std::string>();
        m.model = j.at("model").get<std::string>();
        m.model_digest = j.value("model_digest", "");
        m.parameters = j.at("parameters").get<std::map<std::string, std::string>>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.threads = j.value("threads", 1u);
        m.outputs = j.value("outputs", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("manifest: ") + e.what());
    }
    return m;
}

void CsvReport::add_metadata(std::string key, std::string value) {
    metadata_.emplace_back(std::move(key), std::move(value));
}

void CsvReport::add_metadata(std::string key, double value) {
    metadata_.emplace_back(std::move(key), format_double(value));
}

void CsvReport::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) {
        throw Error(ErrorKind::InvalidArgument, "CSV row width does not match the header");
    }
    rows_.push_back(std::move(cells));
}

std::string CsvReport::render(const std::string& manifest_hash) const {
    std::string out = "# qsdlab " + std::string(kArtifactVersion) + "\n";
    out += "# manifest_hash=" + manifest_hash + "\n";
    for (const auto& [key, value] : metadata_) out += "# " + key + "=" + value + "\n";
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(columns_);
    for (const auto& r : rows_) line(r);
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorKind::InvalidArgument, "write failed for " + path.string());
}

}  // namespace qsd
