#include "domar/config.hpp"

#include <cstdint>
#include <cstdlib>

#include <fmt/format.h>

#include "domar/csv.hpp"
#include "domar/error.hpp"

namespace domar {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::kConfig, fmt::format("config line {}: expected 'key = value'", line_no));
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorKind::kConfig, fmt::format("config line {}: empty key", line_no));
    cfg.set(std::string(key), std::string(value));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorKind::kConfig, fmt::format("config file not found: {}", path.string()));
  }
  return parse(csv::read_text(path));
}

void Config::set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }

bool Config::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

std::optional<std::string> Config::find(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(std::string_view key, std::string_view fallback) const {
  auto v = find(key);
  return v ? *v : std::string(fallback);
}

double Config::get_double(std::string_view key, double fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  char* end = nullptr;
  double d = std::strtod(v->c_str(), &end);
  if (v->empty() || end != v->c_str() + v->size()) {
    fail(ErrorKind::kConfig, fmt::format("config key {}: '{}' is not a number", key, *v));
  }
  return d;
}

long long Config::get_int(std::string_view key, long long fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  char* end = nullptr;
  long long d = std::strtoll(v->c_str(), &end, 10);
  if (v->empty() || end != v->c_str() + v->size()) {
    fail(ErrorKind::kConfig, fmt::format("config key {}: '{}' is not an integer", key, *v));
  }
  return d;
}

bool Config::get_bool(std::string_view key, bool fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  fail(ErrorKind::kConfig, fmt::format("config key {}: '{}' is not a boolean", key, *v));
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += fmt::format("{} = {}\n", k, v);
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace domar
