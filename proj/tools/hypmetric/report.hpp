#pragma once

// Line-oriented reports: every line is a record kind followed by key=value
// fields, e.g. "recall space=head metric=hyperbolic k=1 value=0.95".

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace hypmetric {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

class Record {
 public:
  explicit Record(std::string kind) : kind_(std::move(kind)) {}

  Record& set(const std::string& key, const std::string& value);
  Record& set(const std::string& key, const char* value) { return set(key, std::string(value)); }
  Record& set(const std::string& key, double value) { return set(key, format_double(value)); }
  Record& set(const std::string& key, std::int64_t value) { return set(key, std::to_string(value)); }
  Record& set(const std::string& key, std::uint64_t value) { return set(key, std::to_string(value)); }
  Record& set(const std::string& key, int value) { return set(key, static_cast<std::int64_t>(value)); }
  Record& set(const std::string& key, bool value) { return set(key, std::string(value ? "true" : "false")); }

  const std::string& kind() const noexcept { return kind_; }
  /// Value of key, or empty when absent.
  std::string get(const std::string& key) const;

  std::string line() const;

 private:
  std::string kind_;
  std::vector<std::pair<std::string, std::string>> fields_;
};

class Report {
 public:
  /// Starts with "report command=<command> config_hash=<hash>".
  Report(const std::string& command, const std::string& config_hash);

  Record& add(const std::string& kind);
  const std::vector<Record>& records() const noexcept { return records_; }
  /// First record of the given kind; throws if there is none.
  const Record& first(const std::string& kind) const;

  std::string text() const;
  void write(std::ostream& out) const;
  void save(const std::string& path) const;

 private:
  std::vector<Record> records_;
};

}  // namespace hypmetric
