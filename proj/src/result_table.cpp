#include "omda/result_table.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace omda {

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string csv_body(const ResultTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.schema.size(); ++i) {
    if (i > 0) out += ',';
    out += table.schema[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.schema.size()) {
      throw std::logic_error("csv_body: row arity does not match schema");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += format_real(row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const ResultTable& table, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("write_csv: cannot open " + path.string());
  file << csv_body(table);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

}  // namespace omda
