#include "domar/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "domar/error.hpp"

namespace domar::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string escape(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::column(std::string_view name) const {
  if (auto idx = find_column(name)) return *idx;
  fail(ErrorKind::kSchema, fmt::format("missing column '{}'", name));
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.emplace_back(trim(cur));
  return cells;
}

Table parse(std::string_view text) {
  Table table;
  bool have_header = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      fail(ErrorKind::kSchema,
           fmt::format("line {}: expected {} cells, found {}", line_no, table.header.size(),
                       cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) fail(ErrorKind::kSchema, "empty CSV: no header row");
  return table;
}

Table read(const std::filesystem::path& path) { return parse(read_text(path)); }

bool is_blank(std::string_view cell) {
  cell = trim(cell);
  return cell.empty() || cell == "." || cell == "NA" || cell == "NaN" || cell == "nan";
}

std::optional<double> parse_double(std::string_view cell) {
  cell = trim(cell);
  if (is_blank(cell)) return std::nullopt;
  std::string buf(cell);
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || errno == ERANGE) {
    fail(ErrorKind::kSchema, fmt::format("not a number: '{}'", buf));
  }
  return v;
}

std::optional<long long> parse_int(std::string_view cell) {
  cell = trim(cell);
  if (is_blank(cell)) return std::nullopt;
  std::string buf(cell);
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(buf.c_str(), &end, 10);
  if (end != buf.c_str() + buf.size() || errno == ERANGE) {
    // Accept integral floats such as "1999.0".
    auto d = parse_double(buf);
    if (d && std::floor(*d) == *d) return static_cast<long long>(*d);
    fail(ErrorKind::kSchema, fmt::format("not an integer: '{}'", buf));
  }
  return v;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "";
  if (value == 0.0) return "0";
  return fmt::format("{}", value);
}

Writer::Writer(std::vector<std::string> header) : columns_(header.size()) {
  current_ = std::move(header);
  end_row();
}

Writer& Writer::cell(std::string_view text) {
  current_.push_back(escape(text));
  return *this;
}

Writer& Writer::cell(double value) {
  current_.push_back(format_double(value));
  return *this;
}

Writer& Writer::cell(long long value) {
  current_.push_back(fmt::format("{}", value));
  return *this;
}

Writer& Writer::cell(const std::optional<double>& value) {
  current_.push_back(value ? format_double(*value) : std::string{});
  return *this;
}

void Writer::end_row() {
  if (current_.size() != columns_) {
    fail(ErrorKind::kSchema, fmt::format("CSV row has {} cells, header has {}", current_.size(),
                                         columns_));
  }
  for (std::size_t i = 0; i < current_.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += current_[i];
  }
  buffer_ += '\n';
  current_.clear();
}

std::string Writer::str() const { return buffer_; }

void Writer::save(const std::filesystem::path& path) const { write_text(path, buffer_); }

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, fmt::format("cannot write {}", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace domar::csv
