#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "saddle/harness/config.hpp"
#include "saddle/imf.hpp"

/**
 * \file table.hpp
 *
 * @brief Iteration-by-error tables: one column per run, one row per outer
 * iteration (starting at 1), blank once a run has stopped.
 */

namespace saddle::harness {

/// Render records; labels default to run1, run2, ...
void emit_table(const std::vector<ConvergenceRecord>& records, TableFormat format, std::ostream& out,
                const std::vector<std::string>& labels = {});

std::string render_table(const std::vector<ConvergenceRecord>& records, TableFormat format,
                         const std::vector<std::string>& labels = {});

/// Parse the JSON rendering back into records.
std::vector<ConvergenceRecord> parse_table_json(const nlohmann::json& j);

}  // namespace saddle::harness
