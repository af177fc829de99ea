#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace domar {

/// Flat `key = value` configuration with dotted namespaces
/// (e.g. `clean.trim_low = 0.01`). `#` starts a comment.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  void set(std::string key, std::string value);
  bool contains(std::string_view key) const;
  std::optional<std::string> find(std::string_view key) const;

  std::string get_string(std::string_view key, std::string_view fallback) const;
  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

  /// Sorted `key = value` lines; stable input for hashing.
  std::string canonical() const;

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

/// 64-bit FNV-1a; used for manifest hashes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace domar
