#include "litefat/kv.hpp"

#include <sstream>

#include "litefat/errors.hpp"

namespace litefat {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

KvDoc parse_kv(const std::string& text) {
  KvDoc doc;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw FormatError("config line " + std::to_string(line_no) +
                        ": empty key");
    doc.emplace_back(key, value);
  }
  return doc;
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* want) {
  throw FormatError("config key " + key + ": cannot read \"" + value +
                    "\" as " + want);
}

}  // namespace

std::size_t kv_to_count(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size() || v < 0) bad_value(key, value, "a count");
    return static_cast<std::size_t>(v);
  } catch (const FormatError&) {
    throw;
  } catch (...) {
    bad_value(key, value, "a count");
  }
}

double kv_to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) bad_value(key, value, "a number");
    return v;
  } catch (const FormatError&) {
    throw;
  } catch (...) {
    bad_value(key, value, "a number");
  }
}

bool kv_to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "a boolean");
}

std::uint64_t kv_to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) bad_value(key, value, "an unsigned integer");
    return v;
  } catch (const FormatError&) {
    throw;
  } catch (...) {
    bad_value(key, value, "an unsigned integer");
  }
}

std::vector<std::size_t> kv_to_count_list(const std::string& key,
                                          const std::string& value) {
  std::vector<std::size_t> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) bad_value(key, value, "a comma-separated count list");
    out.push_back(kv_to_count(key, item));
  }
  if (out.empty()) bad_value(key, value, "a comma-separated count list");
  return out;
}

}  // namespace litefat
