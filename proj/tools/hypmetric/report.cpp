#include "report.hpp"

#include "hypml/error.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

namespace hypmetric {
namespace {

// Fields are separated by spaces, so whitespace and '%' are percent-encoded.
std::string escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    if (ch == ' ') {
      out += "%20";
    } else if (ch == '%') {
      out += "%25";
    } else if (ch == '\n') {
      out += "%0A";
    } else if (ch == '\t') {
      out += "%09";
    } else {
      out += ch;
    }
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

Record& Record::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : fields_) {
    if (k == key) {
      v = escape(value);
      return *this;
    }
  }
  fields_.emplace_back(key, escape(value));
  return *this;
}

std::string Record::get(const std::string& key) const {
  for (const auto& [k, v] : fields_) {
    if (k == key) return v;
  }
  return {};
}

std::string Record::line() const {
  std::string out = kind_;
  for (const auto& [k, v] : fields_) out += " " + k + "=" + v;
  return out;
}

Report::Report(const std::string& command, const std::string& config_hash) {
  add("report").set("command", command).set("config_hash", config_hash);
}

Record& Report::add(const std::string& kind) { return records_.emplace_back(kind); }

const Record& Report::first(const std::string& kind) const {
  for (const Record& r : records_) {
    if (r.kind() == kind) return r;
  }
  hypml::fail(hypml::ErrorKind::Config, "report has no '" + kind + "' record");
}

std::string Report::text() const {
  std::string out;
  for (const Record& r : records_) out += r.line() + "\n";
  return out;
}

void Report::write(std::ostream& out) const { out << text(); }

void Report::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  hypml::require(static_cast<bool>(out), hypml::ErrorKind::Data, "cannot write " + path);
  write(out);
  hypml::require(static_cast<bool>(out), hypml::ErrorKind::Data, "failed writing " + path);
}

}  // namespace hypmetric
