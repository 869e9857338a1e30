#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace omda {

// Tabular experiment output.  Cells are reals/integers; metadata carries the
// config snapshot, artifact version, and seeds, and round-trips through the
// JSON summary.
struct ResultTable {
  std::vector<std::string> schema;
  std::vector<std::vector<double>> rows;
  nlohmann::ordered_json metadata;
};

// Full 17-significant-digit decimal rendering; integers print without a point.
std::string format_real(double value);

// Header row plus data rows, '.' decimal separator, '\n' line ends.
std::string csv_body(const ResultTable& table);

void write_csv(const ResultTable& table, const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace omda
