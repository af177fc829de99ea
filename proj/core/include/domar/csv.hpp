#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace domar::csv {

/// Comma-separated table with a header row. Cells are kept as text; typed
/// access goes through the parse_* helpers so blank cells stay distinguishable
/// from zeros.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find_column(std::string_view name) const;
  /// Throws a schema error naming the column when absent.
  std::size_t column(std::string_view name) const;
};

Table parse(std::string_view text);
Table read(const std::filesystem::path& path);

std::vector<std::string> split_line(std::string_view line);

bool is_blank(std::string_view cell);
std::optional<double> parse_double(std::string_view cell);
std::optional<long long> parse_int(std::string_view cell);

/// Shortest decimal form that round-trips exactly through parse_double.
std::string format_double(double value);

/// Row-oriented writer producing byte-stable output ('\n' line endings).
class Writer {
 public:
  explicit Writer(std::vector<std::string> header);

  Writer& cell(std::string_view text);
  Writer& cell(double value);
  Writer& cell(long long value);
  Writer& cell(int value) { return cell(static_cast<long long>(value)); }
  Writer& cell(bool value) { return cell(static_cast<long long>(value ? 1 : 0)); }
  Writer& cell(const std::optional<double>& value);
  void end_row();

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t columns_;
  std::vector<std::string> current_;
  std::string buffer_;
};

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace domar::csv
