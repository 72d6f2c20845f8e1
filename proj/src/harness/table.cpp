#include "saddle/harness/table.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace saddle::harness {

namespace {

std::vector<std::string> column_names(std::size_t n, const std::vector<std::string>& labels) {
  require(labels.empty() || labels.size() == n, "emit_table: one label per record is required");
  if (!labels.empty()) return labels;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(fmt::format("run{}", i + 1));
  return out;
}

int row_count(const std::vector<ConvergenceRecord>& records) {
  int rows = 0;
  for (const auto& r : records) rows = std::max(rows, r.outer_iterations());
  return rows;
}

// Error of record r after outer iteration k, if it got that far.
const IterationRecord* at(const ConvergenceRecord& r, int k) {
  for (const auto& it : r.iterations) {
    if (it.iter == k) return &it;
  }
  return nullptr;
}

}  // namespace

void emit_table(const std::vector<ConvergenceRecord>& records, TableFormat format, std::ostream& out,
                const std::vector<std::string>& labels) {
  const auto names = column_names(records.size(), labels);
  const int rows = row_count(records);
  switch (format) {
    case TableFormat::csv: {
      out << "iter";
      for (const auto& n : names) out << ',' << n;
      out << '\n';
      for (int k = 1; k <= rows; ++k) {
        out << k;
        for (const auto& r : records) {
          const auto* it = at(r, k);
          out << ',';
          if (it && std::isfinite(it->error)) out << fmt::format("{:.17g}", it->error);
        }
        out << '\n';
      }
      break;
    }
    case TableFormat::markdown: {
      out << "| Iter |";
      for (const auto& n : names) out << ' ' << n << " |";
      out << "\n|---:|";
      for (std::size_t i = 0; i < names.size(); ++i) out << "---:|";
      out << '\n';
      for (int k = 1; k <= rows; ++k) {
        out << "| " << k << " |";
        for (const auto& r : records) {
          const auto* it = at(r, k);
          out << ' ' << (it && std::isfinite(it->error) ? fmt::format("{:.3e}", it->error) : std::string()) << " |";
        }
        out << '\n';
      }
      break;
    }
    case TableFormat::json: {
      nlohmann::json j = nlohmann::json::array();
      for (std::size_t i = 0; i < records.size(); ++i) {
        nlohmann::json r = records[i].to_json();
        r["label"] = names[i];
        j.push_back(std::move(r));
      }
      out << j.dump(1) << '\n';
      break;
    }
  }
}

std::string render_table(const std::vector<ConvergenceRecord>& records, TableFormat format,
                         const std::vector<std::string>& labels) {
  std::ostringstream s;
  emit_table(records, format, s, labels);
  return s.str();
}

std::vector<ConvergenceRecord> parse_table_json(const nlohmann::json& j) {
  require(j.is_array(), "parse_table_json: expected an array of records");
  std::vector<ConvergenceRecord> out;
  for (const auto& r : j) out.push_back(ConvergenceRecord::from_json(r));
  return out;
}

}  // namespace saddle::harness
