#include "coldrec/json_util.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace coldrec {

ObjectReader::ObjectReader(const Json& object, std::string context)
    : object_(object), context_(std::move(context)) {
  if (!object_.is_object()) throw ConfigError(context_ + ": expected a JSON object");
}

void ObjectReader::fail(const std::string& key, const std::string& what) const {
  throw ConfigError(context_ + "." + key + ": " + what);
}

bool ObjectReader::has(const std::string& key) const { return object_.contains(key); }

const Json& ObjectReader::require(const std::string& key) {
  seen_.insert(key);
  auto it = object_.find(key);
  if (it == object_.end()) fail(key, "missing");
  return *it;
}

const Json& ObjectReader::raw(const std::string& key) { return require(key); }

double ObjectReader::number(const std::string& key) {
  const Json& v = require(key);
  if (!v.is_number()) fail(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(key, "not finite");
  return x;
}

double ObjectReader::number(const std::string& key, double fallback) {
  seen_.insert(key);
  return has(key) ? number(key) : fallback;
}

std::size_t ObjectReader::count(const std::string& key) {
  const Json& v = require(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    fail(key, "expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::size_t ObjectReader::count(const std::string& key, std::size_t fallback) {
  seen_.insert(key);
  return has(key) ? count(key) : fallback;
}

std::uint64_t ObjectReader::seed(const std::string& key, std::uint64_t fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  const Json& v = object_.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    fail(key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool ObjectReader::flag(const std::string& key, bool fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  const Json& v = object_.at(key);
  if (!v.is_boolean()) fail(key, "expected true or false");
  return v.get<bool>();
}

std::string ObjectReader::text(const std::string& key) {
  const Json& v = require(key);
  if (!v.is_string()) fail(key, "expected a string");
  return v.get<std::string>();
}

std::string ObjectReader::text(const std::string& key, const std::string& fallback) {
  seen_.insert(key);
  return has(key) ? text(key) : fallback;
}

std::vector<double> ObjectReader::numbers(const std::string& key, std::vector<double> fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  const Json& v = object_.at(key);
  if (!v.is_array()) fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) fail(key, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::size_t> ObjectReader::counts(const std::string& key,
                                              std::vector<std::size_t> fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  const Json& v = object_.at(key);
  if (!v.is_array()) fail(key, "expected an array of integers");
  std::vector<std::size_t> out;
  for (const auto& x : v) {
    if (!x.is_number_integer() || x.get<long long>() < 0) {
      fail(key, "expected an array of non-negative integers");
    }
    out.push_back(x.get<std::size_t>());
  }
  return out;
}

std::vector<std::string> ObjectReader::texts(const std::string& key,
                                             std::vector<std::string> fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  const Json& v = object_.at(key);
  if (!v.is_array()) fail(key, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) fail(key, "expected an array of strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

void ObjectReader::finish() const {
  for (auto it = object_.begin(); it != object_.end(); ++it) {
    if (!seen_.contains(it.key())) throw ConfigError(context_ + ": unknown field '" + it.key() + "'");
  }
}

std::string exact_decimal(double value) {
  if (!std::isfinite(value)) throw NumericError("cannot encode a non-finite value");
  return fmt::format("{}", value);
}

double parse_exact_decimal(const std::string& text) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError("not a finite decimal: '" + text + "'", 0);
  }
  return value;
}

Json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path, 0);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write " + path, 0);
  out << contents;
  if (!out) throw LoadError("write failed for " + path, 0);
}

}  // namespace coldrec
