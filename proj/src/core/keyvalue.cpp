#include "fcseg/keyvalue.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fcseg/error.hpp"

namespace fcseg {

namespace pt = boost::property_tree;

struct KeyValueFile::Impl {
  pt::ptree tree;
};

namespace {

// "section.key.with.dots": only the first dot separates the section.
pt::ptree::path_type kv_path(const std::string& key) {
  std::string p = key;
  if (auto dot = p.find('.'); dot != std::string::npos) p[dot] = '\x1f';
  return pt::ptree::path_type(p, '\x1f');
}

}  // namespace

KeyValueFile::KeyValueFile() : impl_(std::make_unique<Impl>()) {}
KeyValueFile::~KeyValueFile() = default;
KeyValueFile::KeyValueFile(const KeyValueFile& other)
    : impl_(std::make_unique<Impl>(*other.impl_)) {}
KeyValueFile& KeyValueFile::operator=(const KeyValueFile& other) {
  if (this != &other) impl_ = std::make_unique<Impl>(*other.impl_);
  return *this;
}
KeyValueFile::KeyValueFile(KeyValueFile&&) noexcept = default;
KeyValueFile& KeyValueFile::operator=(KeyValueFile&&) noexcept = default;

KeyValueFile KeyValueFile::parse(const std::string& text) {
  KeyValueFile out;
  // The INI reader only knows whole-line comments; drop "  # ..." tails.
  std::istringstream raw(text);
  std::string stripped, line;
  while (std::getline(raw, line)) {
    for (std::size_t i = 1; i < line.size(); ++i)
      if (line[i] == '#' && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.erase(i);
        break;
      }
    stripped += line;
    stripped += '\n';
  }
  std::istringstream in(stripped);
  try {
    pt::ini_parser::read_ini(in, out.impl_->tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::ConfigError, e.what());
  }
  return out;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse(buffer.str());
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

std::string KeyValueFile::to_string() const {
  std::ostringstream out;
  pt::ini_parser::write_ini(out, impl_->tree);
  return out.str();
}

void KeyValueFile::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out << to_string();
  if (!out) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

bool KeyValueFile::has(const std::string& key) const {
  return static_cast<bool>(impl_->tree.get_child_optional(kv_path(key)));
}

std::vector<std::string> KeyValueFile::keys(const std::string& section) const {
  std::vector<std::string> out;
  const pt::ptree* node = &impl_->tree;
  if (!section.empty()) {
    auto child = impl_->tree.get_child_optional(pt::ptree::path_type(section, '\x1f'));
    if (!child) return out;
    node = &*child;
  }
  for (const auto& [k, v] : *node)
    if (v.empty()) out.push_back(k);
  return out;
}

std::string KeyValueFile::get_string(const std::string& key) const {
  auto v = impl_->tree.get_optional<std::string>(kv_path(key));
  if (!v) fail(ErrorCode::ConfigError, "missing key '" + key + "'");
  return *v;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first < last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last)
    fail(ErrorCode::ConfigError, "key '" + key + "': cannot parse '" + text + "'");
  return value;
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

double KeyValueFile::get_double(const std::string& key) const {
  return parse_number<double>(key, get_string(key));
}
double KeyValueFile::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
long long KeyValueFile::get_int(const std::string& key) const {
  return parse_number<long long>(key, get_string(key));
}
long long KeyValueFile::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool KeyValueFile::get_bool(const std::string& key) const {
  const auto s = get_string(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(ErrorCode::ConfigError, "key '" + key + "': expected boolean, got '" + s + "'");
}
bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& w : split_words(get_string(key))) out.push_back(parse_number<double>(key, w));
  return out;
}

std::vector<long long> KeyValueFile::get_ints(const std::string& key) const {
  std::vector<long long> out;
  for (const auto& w : split_words(get_string(key)))
    out.push_back(parse_number<long long>(key, w));
  return out;
}

std::vector<std::string> KeyValueFile::get_words(const std::string& key) const {
  return split_words(get_string(key));
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  impl_->tree.put(kv_path(key), value);
}
void KeyValueFile::set(const std::string& key, double value) { set(key, format_double(value)); }
void KeyValueFile::set(const std::string& key, long long value) {
  set(key, std::to_string(value));
}
void KeyValueFile::set(const std::string& key, bool value) {
  set(key, std::string(value ? "true" : "false"));
}

void KeyValueFile::set(const std::string& key, const std::vector<double>& values) {
  std::string s;
  for (double v : values) s += (s.empty() ? "" : " ") + format_double(v);
  set(key, s);
}
void KeyValueFile::set(const std::string& key, const std::vector<long long>& values) {
  std::string s;
  for (auto v : values) s += (s.empty() ? "" : " ") + std::to_string(v);
  set(key, s);
}
void KeyValueFile::set(const std::string& key, const std::vector<std::string>& values) {
  std::string s;
  for (const auto& v : values) s += (s.empty() ? "" : " ") + v;
  set(key, s);
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace fcseg
