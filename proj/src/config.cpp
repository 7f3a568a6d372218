#include "quench/config.hpp"

#include "quench/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace quench {

namespace {

class TomlParser {
public:
    explicit TomlParser(std::string_view text) : src_(text) {}

    Json parse()
    {
        Json root = Json::object();
        Json* table = &root;
        while (true) {
            skip_blank_lines();
            if (at_end())
                break;
            if (peek() == '[') {
                ++pos_;
                skip_space();
                if (peek() == '[')
                    fail("arrays of tables are not supported");
                const auto keys = parse_key_path(']');
                expect(']');
                table = &root;
                for (const auto& k : keys) {
                    Json& next = (*table)[k];
                    if (next.is_null())
                        next = Json::object();
                    else if (!next.is_object())
                        fail("'" + k + "' is already a value");
                    table = &next;
                }
                if (!defined_tables_.insert(join(keys)).second)
                    fail("table [" + join(keys) + "] defined twice");
                finish_line();
                continue;
            }
            parse_assignment(*table);
            finish_line();
        }
        return root;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::set<std::string> defined_tables_;

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
    }

    bool at_end() const { return pos_ >= src_.size(); }
    char peek() const { return at_end() ? '\0' : src_[pos_]; }

    void expect(char c)
    {
        if (peek() != c)
            fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    static std::string join(const std::vector<std::string>& keys)
    {
        std::string out;
        for (const auto& k : keys)
            out += (out.empty() ? "" : ".") + k;
        return out;
    }

    void skip_space()
    {
        while (peek() == ' ' || peek() == '\t' || peek() == '\r')
            ++pos_;
    }

    void skip_comment()
    {
        if (peek() == '#')
            while (!at_end() && peek() != '\n')
                ++pos_;
    }

    void skip_blank_lines()
    {
        while (true) {
            skip_space();
            skip_comment();
            if (peek() != '\n')
                return;
            ++pos_;
            ++line_;
        }
    }

    // whitespace, comments and newlines inside arrays
    void skip_layout()
    {
        while (true) {
            skip_space();
            skip_comment();
            if (peek() != '\n')
                return;
            ++pos_;
            ++line_;
        }
    }

    void finish_line()
    {
        skip_space();
        skip_comment();
        if (at_end())
            return;
        if (peek() != '\n')
            fail("unexpected trailing characters");
        ++pos_;
        ++line_;
    }

    std::string parse_simple_key()
    {
        skip_space();
        if (peek() == '"' || peek() == '\'')
            return parse_string();
        const std::size_t start = pos_;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
            ++pos_;
        if (pos_ == start)
            fail("expected a key");
        return std::string(src_.substr(start, pos_ - start));
    }

    std::vector<std::string> parse_key_path(char terminator)
    {
        std::vector<std::string> keys{parse_simple_key()};
        skip_space();
        while (peek() == '.') {
            ++pos_;
            keys.push_back(parse_simple_key());
            skip_space();
        }
        if (peek() != terminator)
            fail(std::string("expected '") + terminator + "' after key");
        return keys;
    }

    void parse_assignment(Json& table)
    {
        const auto keys = parse_key_path('=');
        expect('=');
        skip_space();
        Json value = parse_value();
        Json* target = &table;
        for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
            Json& next = (*target)[keys[i]];
            if (next.is_null())
                next = Json::object();
            else if (!next.is_object())
                fail("'" + keys[i] + "' is already a value");
            target = &next;
        }
        if (target->contains(keys.back()))
            fail("duplicate key '" + join(keys) + "'");
        (*target)[keys.back()] = std::move(value);
    }

    std::string parse_string()
    {
        const char quote = peek();
        ++pos_;
        std::string out;
        while (true) {
            if (at_end() || peek() == '\n')
                fail("unterminated string");
            const char c = src_[pos_++];
            if (c == quote)
                break;
            if (c == '\\' && quote == '"') {
                if (at_end())
                    fail("unterminated escape");
                const char e = src_[pos_++];
                switch (e) {
                case 'n':
                    out += '\n';
                    break;
                case 't':
                    out += '\t';
                    break;
                case '"':
                    out += '"';
                    break;
                case '\\':
                    out += '\\';
                    break;
                default:
                    fail(std::string("unsupported escape \\") + e);
                }
                continue;
            }
            out += c;
        }
        return out;
    }

    Json parse_value()
    {
        const char c = peek();
        if (c == '"' || c == '\'')
            return parse_string();
        if (c == '[')
            return parse_array();
        if (c == '{')
            return parse_inline_table();
        const std::size_t start = pos_;
        while (!at_end() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' && peek() != ']' &&
               peek() != '}' && peek() != '#')
            ++pos_;
        const std::string token(src_.substr(start, pos_ - start));
        if (token.empty())
            fail("expected a value");
        if (token == "true")
            return true;
        if (token == "false")
            return false;
        Json number = parse_number(token);
        if (number.is_null())
            fail("cannot parse value '" + token + "'");
        return number;
    }

    static Json parse_number(std::string token)
    {
        std::erase(token, '_');
        if (token == "inf" || token == "+inf")
            return std::numeric_limits<double>::infinity();
        if (token == "-inf")
            return -std::numeric_limits<double>::infinity();
        if (token == "nan" || token == "+nan" || token == "-nan")
            return std::numeric_limits<double>::quiet_NaN();
        const char* first = token.data() + (token[0] == '+' ? 1 : 0);
        const char* last = token.data() + token.size();
        const bool is_float = token.find_first_of(".eE") != std::string::npos;
        if (!is_float) {
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(first, last, v);
            if (ec == std::errc() && p == last)
                return v;
            return nullptr;
        }
        double v = 0.0;
        auto [p, ec] = std::from_chars(first, last, v);
        if (ec == std::errc() && p == last)
            return v;
        return nullptr;
    }

    Json parse_array()
    {
        expect('[');
        Json arr = Json::array();
        while (true) {
            skip_layout();
            if (peek() == ']') {
                ++pos_;
                return arr;
            }
            arr.push_back(parse_value());
            skip_layout();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            if (peek() == ']') {
                ++pos_;
                return arr;
            }
            fail("expected ',' or ']' in array");
        }
    }

    Json parse_inline_table()
    {
        expect('{');
        Json table = Json::object();
        skip_space();
        if (peek() == '}') {
            ++pos_;
            return table;
        }
        while (true) {
            parse_assignment(table);
            skip_space();
            if (peek() == ',') {
                ++pos_;
                skip_space();
                continue;
            }
            if (peek() == '}') {
                ++pos_;
                return table;
            }
            fail("expected ',' or '}' in inline table");
        }
    }
};

std::string type_error(const std::string& path, const char* wanted)
{
    return path + ": expected " + wanted;
}

} // namespace

Json parse_toml(std::string_view text) { return TomlParser(text).parse(); }

Json load_toml_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_toml(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void merge_into(Json& base, const Json& patch)
{
    if (!base.is_object() || !patch.is_object()) {
        base = patch;
        return;
    }
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object())
            merge_into(base[it.key()], it.value());
        else
            base[it.key()] = it.value();
    }
}

void set_path(Json& root, const std::string& dotted, Json value)
{
    Json* node = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty())
            throw ConfigError("malformed field path '" + dotted + "'");
        if (dot == std::string::npos) {
            (*node)[key] = std::move(value);
            return;
        }
        Json& next = (*node)[key];
        if (next.is_null())
            next = Json::object();
        else if (!next.is_object())
            throw ConfigError(dotted + ": '" + key + "' is not a table");
        node = &next;
        start = dot + 1;
    }
}

const Json* find_path(const Json& root, const std::string& dotted)
{
    const Json* node = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object())
            return nullptr;
        auto it = node->find(key);
        if (it == node->end())
            return nullptr;
        node = &*it;
        if (dot == std::string::npos)
            return node;
        start = dot + 1;
    }
}

std::string fnv1a_hex(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json parse_scalar(const std::string& text)
{
    if (text == "true")
        return true;
    if (text == "false")
        return false;
    std::string token = text;
    if (!token.empty()) {
        std::int64_t i = 0;
        auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), i);
        if (ec == std::errc() && p == token.data() + token.size())
            return i;
        double d = 0.0;
        auto [q, ec2] = std::from_chars(token.data(), token.data() + token.size(), d);
        if (ec2 == std::errc() && q == token.data() + token.size())
            return d;
    }
    return text;
}

Json ExperimentConfig::hashed_tree() const
{
    Json t = tree;
    if (auto it = t.find("output"); it != t.end() && it->is_object()) {
        it->erase("dir");
        if (it->empty())
            t.erase("output");
    }
    if (auto it = t.find("ensemble"); it != t.end() && it->is_object()) {
        it->erase("workers");
        if (it->empty())
            t.erase("ensemble");
    }
    return t;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(hashed_tree().dump()); }

double ExperimentConfig::number(const std::string& path) const
{
    const Json* v = find_path(tree, path);
    if (!v)
        throw ConfigError(path + ": required field missing");
    if (!v->is_number())
        throw ConfigError(type_error(path, "a number"));
    return v->get<double>();
}

double ExperimentConfig::number_or(const std::string& path, double fallback) const
{
    return has(path) ? number(path) : fallback;
}

double ExperimentConfig::positive(const std::string& path) const
{
    const double v = number(path);
    if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(path + ": must be positive and finite");
    return v;
}

double ExperimentConfig::positive_or(const std::string& path, double fallback) const
{
    return has(path) ? positive(path) : fallback;
}

std::int64_t ExperimentConfig::integer_or(const std::string& path, std::int64_t fallback) const
{
    const Json* v = find_path(tree, path);
    if (!v)
        return fallback;
    if (v->is_number_integer())
        return v->get<std::int64_t>();
    if (v->is_number_float()) {
        const double d = v->get<double>();
        if (std::floor(d) == d && std::abs(d) < 9e15)
            return static_cast<std::int64_t>(d);
    }
    throw ConfigError(type_error(path, "an integer"));
}

bool ExperimentConfig::boolean_or(const std::string& path, bool fallback) const
{
    const Json* v = find_path(tree, path);
    if (!v)
        return fallback;
    if (!v->is_boolean())
        throw ConfigError(type_error(path, "true or false"));
    return v->get<bool>();
}

std::string ExperimentConfig::string_or(const std::string& path, const std::string& fallback) const
{
    const Json* v = find_path(tree, path);
    if (!v)
        return fallback;
    if (v->is_string())
        return v->get<std::string>();
    if (v->is_number())
        return v->dump();
    throw ConfigError(type_error(path, "a string"));
}

std::vector<double> ExperimentConfig::numbers_or(const std::string& path, std::vector<double> fallback) const
{
    const Json* v = find_path(tree, path);
    if (!v)
        return fallback;
    if (v->is_number())
        return {v->get<double>()};
    if (!v->is_array())
        throw ConfigError(type_error(path, "a number or a list of numbers"));
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number())
            throw ConfigError(path + "[" + std::to_string(i) + "]: expected a number");
        out.push_back((*v)[i].get<double>());
    }
    return out;
}

std::optional<double> ExperimentConfig::optional_number(const std::string& path) const
{
    if (!has(path))
        return std::nullopt;
    return number(path);
}

const std::set<std::string>& known_fields(const std::string& experiment)
{
    static const std::set<std::string> common = {
        "experiment", "description", "ensemble.seed", "ensemble.runs", "ensemble.workers", "output.dir",
        "output.times", "output.times_after_start",
    };
    auto with_common = [](std::set<std::string> s) {
        s.insert(common.begin(), common.end());
        return s;
    };
    static const std::set<std::string> schedule = {
        "schedule.kind", "schedule.tau_q", "schedule.theta", "schedule.beta", "schedule.beta_c",
        "schedule.varying_beta", "schedule.mu", "schedule.window",
    };
    auto with_schedule = [&](std::set<std::string> s) {
        s.insert(schedule.begin(), schedule.end());
        return with_common(std::move(s));
    };
    static const std::set<std::string> linear = with_schedule({
        "model.gamma0", "model.e_k", "run.t_start", "run.t_end", "run.samples", "run.departure_factor",
        "run.n_cap",
    });
    static const std::set<std::string> toy = with_schedule({
        "model.energy", "model.n_c", "model.gamma", "model.gamma_tilde", "seeds.placement", "seeds.total",
        "seeds.count", "seeds.nbar", "seeds.start", "seeds.qkt_start", "flow.t_end", "flow.samples", "flow.smallness",
        "gaussian.enabled", "master.enabled", "master.n_max", "master.duration", "master.leakage_threshold",
    });
    static const std::set<std::string> ring = with_common({
        "ring.pipeline", "ring.tau_q", "ring.n_domains", "ring.length", "ring.sites", "ring.gamma0",
        "ring.beta_c", "ring.lambda", "ring.tau0", "ring.k_max", "ring.qkt_start", "ring.handoff",
        "ring.t_end", "ring.dt",
    });
    if (experiment == "linear-qkt")
        return linear;
    if (experiment == "toy")
        return toy;
    if (experiment == "ring" || experiment == "scan")
        return ring;
    throw ConfigError("unknown experiment '" + experiment + "'");
}

namespace {

void collect_leaves(const Json& node, const std::string& prefix, std::vector<std::string>& out)
{
    if (node.is_object() && !node.empty()) {
        for (auto it = node.begin(); it != node.end(); ++it)
            collect_leaves(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
        return;
    }
    out.push_back(prefix);
}

} // namespace

ExperimentConfig build_config(const std::string& experiment, const std::optional<std::string>& preset,
                              const std::optional<std::filesystem::path>& file, const Json& overrides)
{
    const auto& known = known_fields(experiment);
    Json tree = Json::object();
    if (preset) {
        const std::string_view source = preset_source(*preset);
        try {
            tree = parse_toml(source);
        } catch (const ConfigError& e) {
            throw ConfigError("preset " + *preset + ": " + e.what());
        }
    }
    if (file)
        merge_into(tree, load_toml_file(*file));
    merge_into(tree, overrides);

    if (auto it = tree.find("experiment"); it != tree.end()) {
        if (!it->is_string())
            throw ConfigError("experiment: expected a string");
        const std::string named = it->get<std::string>();
        // the ring and scan subcommands share one configuration layout
        const bool compatible = named == experiment || ((named == "ring" || named == "scan") &&
                                                        (experiment == "ring" || experiment == "scan"));
        if (!compatible)
            throw ConfigError("experiment: configuration is for '" + named + "', not '" + experiment + "'");
    }

    std::vector<std::string> leaves;
    if (!tree.empty())
        collect_leaves(tree, "", leaves);
    for (const auto& leaf : leaves)
        if (!known.count(leaf))
            throw ConfigError(leaf + ": unknown field for experiment '" + experiment + "'");

    ExperimentConfig cfg;
    cfg.experiment = experiment;
    cfg.tree = std::move(tree);
    const std::int64_t seed = cfg.integer_or("ensemble.seed", 0);
    if (seed < 0)
        throw ConfigError("ensemble.seed: must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(seed);
    const std::int64_t workers = cfg.integer_or("ensemble.workers", 1);
    if (workers < 1 || workers > 1024)
        throw ConfigError("ensemble.workers: must be between 1 and 1024");
    cfg.workers = static_cast<unsigned>(workers);
    cfg.out_dir = cfg.string_or("output.dir", ".");
    cfg.output_times = cfg.numbers_or("output.times", {});
    if (cfg.has("ensemble.runs") && cfg.integer_or("ensemble.runs", 0) < 0)
        throw ConfigError("ensemble.runs: must be non-negative");
    return cfg;
}

} // namespace quench
