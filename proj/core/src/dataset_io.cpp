#include "hypml/dataset.hpp"

#include "hypml/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace hypml::data {
namespace {

constexpr std::array<char, 4> kMagic{'H', 'Y', 'P', 'D'};

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  const U bits = std::bit_cast<U>(value);
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(U));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  unsigned char bytes[sizeof(U)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(U));
  require(in.gcount() == static_cast<std::streamsize>(sizeof(U)), ErrorKind::Data,
          std::string("truncated dataset file while reading ") + what);
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

}  // namespace

Format format_for_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".csv" ? Format::Csv : Format::Binary;
}

void write_binary(std::ostream& out, const VectorDataset& data) {
  data.validate();
  require(data.size() <= UINT32_MAX && data.dim() <= UINT32_MAX, ErrorKind::Data,
          "dataset too large for the binary format");
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(out, kBinaryVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.size()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.dim()));
  for (Label l : data.labels) put_le<std::uint32_t>(out, l);
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < data.dim(); ++j) put_le<double>(out, data.features(i, j));
  }
}

VectorDataset read_binary(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  require(in.gcount() == 4, ErrorKind::Data, "empty or truncated dataset file");
  require(magic == kMagic, ErrorKind::Data, "bad magic bytes: not a HYPD dataset");
  const auto version = get_le<std::uint16_t>(in, "version");
  require(version == kBinaryVersion, ErrorKind::Data,
          "unsupported dataset version " + std::to_string(version));
  const auto rows = get_le<std::uint32_t>(in, "row count");
  const auto cols = get_le<std::uint32_t>(in, "dimension");

  VectorDataset data;
  data.labels.resize(rows);
  for (auto& l : data.labels) l = get_le<std::uint32_t>(in, "labels");
  data.features.resize(rows, cols);
  for (Index i = 0; i < data.features.rows(); ++i) {
    for (Index j = 0; j < data.features.cols(); ++j) data.features(i, j) = get_le<double>(in, "features");
  }
  in.peek();
  require(in.eof(), ErrorKind::Data, "trailing bytes after dataset payload");
  require(data.features.allFinite(), ErrorKind::Data, "dataset contains non-finite values");
  return data;
}

void write_csv(std::ostream& out, const VectorDataset& data) {
  data.validate();
  out << "label";
  for (Index j = 0; j < data.dim(); ++j) out << ",f" << j;
  out << '\n';
  char buffer[40];
  for (Index i = 0; i < data.size(); ++i) {
    out << data.labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < data.dim(); ++j) {
      std::snprintf(buffer, sizeof buffer, "%.17g", data.features(i, j));
      out << ',' << buffer;
    }
    out << '\n';
  }
}

VectorDataset read_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Data, "empty CSV dataset");
  const auto header = split_commas(trim(line));
  require(header.size() >= 2 && trim(header[0]) == "label", ErrorKind::Data,
          "malformed CSV header: expected label,f0,...");
  for (std::size_t j = 1; j < header.size(); ++j) {
    require(trim(header[j]) == "f" + std::to_string(j - 1), ErrorKind::Data,
            "malformed CSV header column " + std::to_string(j));
  }
  const std::size_t dim = header.size() - 1;

  Labels labels;
  std::vector<double> values;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string_view content = trim(line);
    if (content.empty()) continue;
    const auto fields = split_commas(content);
    if (fields.size() != dim + 1) {
      std::ostringstream msg;
      msg << "CSV line " << line_number << " has " << fields.size() << " fields, expected " << dim + 1;
      fail(ErrorKind::Data, msg.str());
    }
    const std::string_view label_text = trim(fields[0]);
    Label label = 0;
    const auto [lp, lec] = std::from_chars(label_text.data(), label_text.data() + label_text.size(), label);
    require(lec == std::errc() && lp == label_text.data() + label_text.size(), ErrorKind::Data,
            "CSV line " + std::to_string(line_number) + ": bad label");
    labels.push_back(label);
    for (std::size_t j = 1; j <= dim; ++j) {
      const std::string_view text = trim(fields[j]);
      double v = 0.0;
      const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      require(ec == std::errc() && p == text.data() + text.size(), ErrorKind::Data,
              "CSV line " + std::to_string(line_number) + ": bad number in column " + std::to_string(j));
      require(std::isfinite(v), ErrorKind::Data,
              "CSV line " + std::to_string(line_number) + ": non-finite value");
      values.push_back(v);
    }
  }

  VectorDataset data;
  data.labels = std::move(labels);
  data.features = Eigen::Map<const Matrix>(values.data(), static_cast<Index>(data.labels.size()),
                                           static_cast<Index>(dim));
  return data;
}

void save_dataset(const std::filesystem::path& path, const VectorDataset& data) {
  save_dataset(path, data, format_for_path(path));
}

void save_dataset(const std::filesystem::path& path, const VectorDataset& data, Format format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.is_open(), ErrorKind::Data, "cannot open '" + path.string() + "' for writing");
  if (format == Format::Binary) {
    write_binary(out, data);
  } else {
    write_csv(out, data);
  }
  out.flush();
  require(out.good(), ErrorKind::Data, "failed writing '" + path.string() + "'");
}

VectorDataset load_dataset(const std::filesystem::path& path) { return load_dataset(path, format_for_path(path)); }

VectorDataset load_dataset(const std::filesystem::path& path, Format format) {
  std::ifstream in(path, std::ios::binary);
  require(in.is_open(), ErrorKind::Data, "cannot open dataset '" + path.string() + "'");
  return format == Format::Binary ? read_binary(in) : read_csv(in);
}

}  // namespace hypml::data
