#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qsd {

inline constexpr std::string_view kArtifactVersion = "0.1.0";

/// %.17g, with "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double value);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

/// Everything that determines the numbers of a run. The hash covers the
/// subcommand, the model digest, the parameters, the seed and the version;
/// the worker count and the wall-clock time are recorded but not hashed,
/// since neither changes any emitted number.
struct RunManifest {
    std::string subcommand;
    std::string model;         // fixture name or path as given
    std::string model_digest;  // hash of the canonical model file
    std::map<std::string, std::string> parameters;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::vector<std::string> outputs;
    double wall_clock_seconds = 0.0;

    std::string hash() const;
    std::string to_json() const;
    static RunManifest from_json(const std::string& text);
};

/// A CSV report with a '#'-prefixed metadata header.
class CsvReport {
public:
    explicit CsvReport(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_metadata(std::string key, std::string value);
    void add_metadata(std::string key, double value);
    void add_row(std::vector<std::string> cells);

    std::size_t rows() const { return rows_.size(); }
    std::string render(const std::string& manifest_hash) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::pair<std::string, std::string>> metadata_;
    std::vector<std::vector<std::string>> rows_;
};

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace qsd
