#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace fcseg {

/// Plain-text key/value document with optional [sections] and '#' comments.
/// Keys are addressed as "key" (top level) or "section.key". Every format the
/// toolkit writes (volume headers, trained models, configs, reports) uses it.
class KeyValueFile {
 public:
  KeyValueFile();
  ~KeyValueFile();
  KeyValueFile(const KeyValueFile&);
  KeyValueFile& operator=(const KeyValueFile&);
  KeyValueFile(KeyValueFile&&) noexcept;
  KeyValueFile& operator=(KeyValueFile&&) noexcept;

  /// Throws IoFailure if unreadable, ConfigError on syntax errors.
  static KeyValueFile load(const std::filesystem::path& path);
  static KeyValueFile parse(const std::string& text);

  void save(const std::filesystem::path& path) const;
  std::string to_string() const;

  bool has(const std::string& key) const;
  std::vector<std::string> keys(const std::string& section = "") const;

  // Getters throw ConfigError when the key is missing or malformed.
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<long long> get_ints(const std::string& key) const;
  std::vector<std::string> get_words(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, bool value);
  void set(const std::string& key, const std::vector<double>& values);
  void set(const std::string& key, const std::vector<long long>& values);
  void set(const std::string& key, const std::vector<std::string>& values);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace fcseg
