#include "divuda/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "divuda/errors.hpp"

namespace divuda {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream out;
  for (std::size_t d = 0; d < data.feature_dim; ++d) out << 'f' << d << ',';
  out << "label,true_label,domain\n";
  for (const auto& s : data.samples) {
    for (double v : s.features) out << format_double(v) << ',';
    if (s.observed_label) out << *s.observed_label;
    out << ',';
    if (s.true_label) out << *s.true_label;
    out << ',' << (s.domain == Domain::kSource ? "source" : "target") << '\n';
  }
  return out.str();
}

void write_csv_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << dataset_to_csv(data);
}

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_real(const std::string& cell, std::size_t line) {
  double v = 0.0;
  const std::string t = trim(cell);
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ParseError("non-numeric feature value '" + cell + "'", line);
  return v;
}

std::optional<ClassId> parse_label(const std::string& cell, std::size_t line,
                                   const CsvSchema& schema) {
  const std::string t = trim(cell);
  if (t.empty()) return std::nullopt;
  ClassId v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ParseError("non-integer label '" + cell + "'", line);
  if (!schema.allowed_labels.empty() &&
      std::find(schema.allowed_labels.begin(), schema.allowed_labels.end(), v) ==
          schema.allowed_labels.end())
    throw DataError("line " + std::to_string(line) + ": unknown label " + std::to_string(v));
  return v;
}

}  // namespace

Dataset parse_csv_dataset(const std::string& text, const CsvSchema& schema) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);

  std::size_t dim = 0;
  while (dim < header.size() && header[dim] == "f" + std::to_string(dim)) ++dim;
  std::optional<std::size_t> label_col, true_col, domain_col;
  for (std::size_t c = dim; c < header.size(); ++c) {
    const std::string h = trim(header[c]);
    if (h == "label") label_col = c;
    else if (h == "true_label") true_col = c;
    else if (h == "domain") domain_col = c;
    else throw ParseError("unexpected column '" + h + "'", 1);
  }
  if (!label_col) throw ParseError("header lacks a label column", 1);
  if (schema.feature_dim && *schema.feature_dim != dim)
    throw ParseError("expected " + std::to_string(*schema.feature_dim) + " feature columns, found " +
                         std::to_string(dim),
                     1);

  Dataset data{dim, {}};
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       line_no);
    LabeledSample s;
    s.features.reserve(dim);
    for (std::size_t d = 0; d < dim; ++d) s.features.push_back(parse_real(cells[d], line_no));
    s.observed_label = parse_label(cells[*label_col], line_no, schema);
    if (true_col) s.true_label = parse_label(cells[*true_col], line_no, schema);
    s.domain = Domain::kSource;
    if (domain_col) {
      const std::string d = trim(cells[*domain_col]);
      if (d == "target") s.domain = Domain::kTarget;
      else if (d != "source") throw ParseError("domain must be 'source' or 'target'", line_no);
    }
    data.samples.push_back(std::move(s));
  }
  return data;
}

Dataset load_csv_dataset(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv_dataset(buf.str(), schema);
}

}  // namespace divuda
