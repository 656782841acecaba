#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "divuda/dataset.hpp"

namespace divuda {

// Dataset CSV layout: header `f0,...,f{d-1},label[,true_label],domain`.
// Empty label cells mean "no label" (target rows).
struct CsvSchema {
  // When set, the header must carry exactly this many feature columns.
  std::optional<std::size_t> feature_dim;
  // When non-empty, every label and true_label must be one of these ids.
  std::vector<ClassId> allowed_labels;
};

void write_csv_dataset(const std::filesystem::path& path, const Dataset& data);
std::string dataset_to_csv(const Dataset& data);

// Throws ParseError (with line number) on malformed rows and DataError on
// labels outside schema.allowed_labels.
Dataset load_csv_dataset(const std::filesystem::path& path, const CsvSchema& schema = {});
Dataset parse_csv_dataset(const std::string& text, const CsvSchema& schema = {});

// Shortest representation that parses back to the same double.
std::string format_double(double v);

// Splits one CSV line on commas (no quoting; our formats never need it).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace divuda
