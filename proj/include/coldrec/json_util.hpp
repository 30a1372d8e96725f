#pragma once

#include <set>
#include <string>
#include <vector>

#include "coldrec/error.hpp"
#include "json.hpp"

namespace coldrec {

using Json = nlohmann::json;

// Reads fields from one JSON object and rejects keys nobody asked for.
// Every failure is a ConfigError prefixed with `context`.
class ObjectReader {
 public:
  ObjectReader(const Json& object, std::string context);

  bool has(const std::string& key) const;
  const Json& raw(const std::string& key);

  double number(const std::string& key, double fallback);
  double number(const std::string& key);
  std::size_t count(const std::string& key, std::size_t fallback);
  std::size_t count(const std::string& key);
  std::uint64_t seed(const std::string& key, std::uint64_t fallback);
  bool flag(const std::string& key, bool fallback);
  std::string text(const std::string& key, const std::string& fallback);
  std::string text(const std::string& key);
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback);
  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback);
  std::vector<std::string> texts(const std::string& key, std::vector<std::string> fallback);

  // Throws if the object holds a key that was never read.
  void finish() const;

  const std::string& context() const { return context_; }

 private:
  const Json& require(const std::string& key);
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  const Json& object_;
  std::string context_;
  std::set<std::string> seen_;
};

// Shortest decimal string that parses back to exactly `value`.
std::string exact_decimal(double value);
// Parses a decimal string produced by exact_decimal (or any finite decimal).
double parse_exact_decimal(const std::string& text);

Json parse_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace coldrec
