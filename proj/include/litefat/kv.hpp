#pragma once

// Flat dotted-key configuration documents: one "key = value" per line,
// '#' starts a comment, order preserved.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace litefat {

using KvDoc = std::vector<std::pair<std::string, std::string>>;

KvDoc parse_kv(const std::string& text);
std::string trim(const std::string& s);

std::size_t kv_to_count(const std::string& key, const std::string& value);
double kv_to_double(const std::string& key, const std::string& value);
bool kv_to_bool(const std::string& key, const std::string& value);
std::uint64_t kv_to_u64(const std::string& key, const std::string& value);
std::vector<std::size_t> kv_to_count_list(const std::string& key,
                                          const std::string& value);

}  // namespace litefat
