#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace quench {

using Json = nlohmann::json;

/// Parses the TOML subset used by experiment files: [tables] and [dotted.tables],
/// bare/quoted/dotted keys, strings, integers, floats (inc. inf/nan), booleans,
/// (multi-line) arrays and single-line inline tables. Throws ConfigError with
/// the line number on anything else.
Json parse_toml(std::string_view text);

Json load_toml_file(const std::filesystem::path& path);

/// Names of the presets compiled into the binary.
std::vector<std::string> preset_names();
/// Raw TOML of a preset; throws ConfigError for unknown names.
std::string_view preset_source(const std::string& name);

/// Recursive merge; objects merge key-wise, anything else is replaced.
void merge_into(Json& base, const Json& patch);

/// Sets a dotted path, creating intermediate objects.
void set_path(Json& root, const std::string& dotted, Json value);
const Json* find_path(const Json& root, const std::string& dotted);

/// 64-bit FNV-1a, as 16 lower-case hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Parses a command-line scalar: integer, float, true/false, otherwise string.
Json parse_scalar(const std::string& text);

/// Effective configuration of one experiment run.
struct ExperimentConfig {
    std::string experiment;
    Json tree;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::filesystem::path out_dir = ".";
    std::vector<double> output_times;

    /// Hash over the tree with the output directory and worker count removed,
    /// so it identifies the results rather than where or how fast they were made.
    std::string hash() const;
    Json hashed_tree() const;

    // typed access; failures name the dotted field path
    bool has(const std::string& path) const { return find_path(tree, path) != nullptr; }
    double number(const std::string& path) const;
    double number_or(const std::string& path, double fallback) const;
    double positive(const std::string& path) const;
    double positive_or(const std::string& path, double fallback) const;
    std::int64_t integer_or(const std::string& path, std::int64_t fallback) const;
    bool boolean_or(const std::string& path, bool fallback) const;
    std::string string_or(const std::string& path, const std::string& fallback) const;
    /// Accepts a scalar as a one-element list.
    std::vector<double> numbers_or(const std::string& path, std::vector<double> fallback) const;
    std::optional<double> optional_number(const std::string& path) const;
};

/// Known leaf paths per experiment; anything else in the tree is rejected.
const std::set<std::string>& known_fields(const std::string& experiment);

/// preset (if any) <- config file (if any) <- overrides; validates field names
/// and the ensemble/output sections.
ExperimentConfig build_config(const std::string& experiment, const std::optional<std::string>& preset,
                              const std::optional<std::filesystem::path>& file, const Json& overrides);

} // namespace quench
