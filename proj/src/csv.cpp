#include "quench/csv.hpp"

#include "quench/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace quench {

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc())
        throw std::runtime_error("double formatting failed");
    return std::string(buf, end);
}

namespace {

std::string format_cell(const CsvTable::Cell& c)
{
    if (const auto* d = std::get_if<double>(&c))
        return format_double(*d);
    if (const auto* i = std::get_if<std::int64_t>(&c))
        return std::to_string(*i);
    if (const auto* u = std::get_if<std::uint64_t>(&c))
        return std::to_string(*u);
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string quoted = "\"";
    for (char ch : s) {
        if (ch == '"')
            quoted += '"';
        quoted += ch;
    }
    return quoted + '"';
}

} // namespace

CsvTable::CsvTable(std::string experiment, std::string config_hash, std::uint64_t seed,
                   std::vector<std::string> columns)
    : columns_(columns.size())
{
    header_ = "# quench " + experiment + "\n# config_hash " + config_hash + "\n# seed " + std::to_string(seed) + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
        header_ += (i ? "," : "") + columns[i];
    header_ += '\n';
}

void CsvTable::add_row(std::initializer_list<Cell> cells) { add_row(std::vector<Cell>(cells)); }

void CsvTable::add_row(const std::vector<Cell>& cells)
{
    if (cells.size() != columns_)
        throw std::logic_error("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(columns_));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i)
            body_ += ',';
        body_ += format_cell(cells[i]);
    }
    body_ += '\n';
    ++rows_;
}

std::string CsvTable::str() const { return header_ + body_; }

void CsvTable::write(const std::filesystem::path& path) const { write_text_file(path, str()); }

void write_text_file(const std::filesystem::path& path, std::string_view text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(text.data(), std::streamsize(text.size()));
    if (!out)
        throw std::runtime_error("write to " + path.string() + " failed");
}

} // namespace quench
