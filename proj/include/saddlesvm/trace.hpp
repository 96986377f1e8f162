#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "saddlesvm/saddle_core.hpp"

namespace saddlesvm {

/// Column order shared by the CSV header and the JSON row objects.
inline constexpr std::array<std::string_view, 8> kTraceColumns = {
    "iter", "primal", "dual", "gap", "margin", "elapsed_ms", "scalars_up", "scalars_down"};

enum class TraceFormat { Csv, Json };

/// Doubles are written in shortest round-trip form, so CSV and JSON carry the
/// same values.
void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);
nlohmann::json trace_to_json(std::span<const TraceRow> rows);
void write_trace(std::ostream& out, std::span<const TraceRow> rows, TraceFormat format);

/// Inverse of write_trace_csv; throws ParseError on a bad header or row.
std::vector<TraceRow> read_trace_csv(std::istream& in);
std::vector<TraceRow> trace_from_json(const nlohmann::json& j);

}  // namespace saddlesvm
