#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace quench {

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

/// Buffered CSV table. The file starts with `#` comment lines naming the
/// experiment, the config hash and the master seed, then the column header.
/// Nothing touches the disk until write().
class CsvTable {
public:
    using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string>;

    CsvTable(std::string experiment, std::string config_hash, std::uint64_t seed, std::vector<std::string> columns);

    void add_row(std::initializer_list<Cell> cells);
    void add_row(const std::vector<Cell>& cells);
    std::size_t rows() const { return rows_; }

    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    std::string header_;
    std::string body_;
    std::size_t columns_;
    std::size_t rows_ = 0;
};

/// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view text);

} // namespace quench
