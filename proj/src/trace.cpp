#include "saddlesvm/trace.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "saddlesvm/error.hpp"

namespace saddlesvm {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_field(std::string_view s, std::size_t line) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ParseError(line, "bad trace field '" + std::string(s) + "'");
  return v;
}

}  // namespace

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  for (std::size_t c = 0; c < kTraceColumns.size(); ++c)
    out << (c ? "," : "") << kTraceColumns[c];
  out << '\n';
  for (const auto& r : rows) {
    out << r.iter << ',' << format_double(r.primal) << ',' << format_double(r.dual) << ','
        << format_double(r.gap) << ',' << format_double(r.margin) << ','
        << format_double(r.elapsed_ms) << ',' << r.scalars_up << ',' << r.scalars_down << '\n';
  }
}

nlohmann::json trace_to_json(std::span<const TraceRow> rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"iter", r.iter},
                   {"primal", r.primal},
                   {"dual", r.dual},
                   {"gap", r.gap},
                   {"margin", r.margin},
                   {"elapsed_ms", r.elapsed_ms},
                   {"scalars_up", r.scalars_up},
                   {"scalars_down", r.scalars_down}});
  }
  return arr;
}

void write_trace(std::ostream& out, std::span<const TraceRow> rows, TraceFormat format) {
  if (format == TraceFormat::Csv)
    write_trace_csv(out, rows);
  else
    out << trace_to_json(rows).dump(2) << '\n';
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  std::string header;
  for (std::size_t c = 0; c < kTraceColumns.size(); ++c)
    header += std::string(c ? "," : "") + std::string(kTraceColumns[c]);
  if (!std::getline(in, line) || line != header) throw ParseError(1, "unexpected trace header");
  std::vector<TraceRow> rows;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      const auto pos = rest.find(',');
      f.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (f.size() != kTraceColumns.size()) throw ParseError(n, "wrong number of trace fields");
    TraceRow r;
    r.iter = parse_field<std::size_t>(f[0], n);
    r.primal = parse_field<double>(f[1], n);
    r.dual = parse_field<double>(f[2], n);
    r.gap = parse_field<double>(f[3], n);
    r.margin = parse_field<double>(f[4], n);
    r.elapsed_ms = parse_field<double>(f[5], n);
    r.scalars_up = parse_field<std::uint64_t>(f[6], n);
    r.scalars_down = parse_field<std::uint64_t>(f[7], n);
    rows.push_back(r);
  }
  return rows;
}

std::vector<TraceRow> trace_from_json(const nlohmann::json& j) {
  std::vector<TraceRow> rows;
  for (const auto& o : j) {
    TraceRow r;
    r.iter = o.at("iter").get<std::size_t>();
    r.primal = o.at("primal").get<double>();
    r.dual = o.at("dual").get<double>();
    r.gap = o.at("gap").get<double>();
    r.margin = o.at("margin").get<double>();
    r.elapsed_ms = o.at("elapsed_ms").get<double>();
    r.scalars_up = o.at("scalars_up").get<std::uint64_t>();
    r.scalars_down = o.at("scalars_down").get<std::uint64_t>();
    rows.push_back(r);
  }
  return rows;
}

}  // namespace saddlesvm
