#include "saddlesvm/data_model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "saddlesvm/error.hpp"

namespace saddlesvm {

Dataset Dataset::create(std::vector<LabeledPoint> points, std::size_t dim) {
  Dataset out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& p = points[i];
    if (p.label != Label::Positive && p.label != Label::Negative)
      throw ValidationError("point " + std::to_string(i) + ": label must be +1 or -1");
    if (p.features.size() > dim)
      throw ValidationError("point " + std::to_string(i) + " has dimension " +
                            std::to_string(p.features.size()) + " > " + std::to_string(dim));
    for (double v : p.features)
      if (!std::isfinite(v))
        throw ValidationError("point " + std::to_string(i) + " has a non-finite feature");
    p.features.resize(dim, 0.0);
    (p.label == Label::Positive ? out.n1_ : out.n2_)++;
  }
  if (out.n1_ == 0 || out.n2_ == 0)
    throw ValidationError("dataset must contain both classes (got n1=" + std::to_string(out.n1_) +
                          ", n2=" + std::to_string(out.n2_) + ")");
  out.points_ = std::move(points);
  out.dim_ = dim;
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\v\f";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

Label parse_label(std::string_view tok, std::size_t line, const ParseOptions& opts) {
  if (tok == "1" || tok == "+1") return Label::Positive;
  if (tok == "-1") return Label::Negative;
  if (opts.accept_zero_two_labels && (tok == "0" || tok == "2")) return Label::Negative;
  throw ParseError(line, "unsupported label '" + std::string(tok) + "'");
}

double parse_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || tok.empty())
    throw ParseError(line, "bad feature value '" + std::string(tok) + "'");
  if (!std::isfinite(v)) throw ParseError(line, "non-finite feature value");
  return v;
}

std::size_t parse_index(std::string_view tok, std::size_t line) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
    throw ParseError(line, "bad feature index '" + std::string(tok) + "'");
  if (v == 0) throw ParseError(line, "feature indices are 1-based");
  return v;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const ParseOptions& opts) {
  std::vector<LabeledPoint> points;
  std::size_t dim = opts.min_dim;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;

    LabeledPoint p;
    std::vector<std::pair<std::size_t, double>> entries;
    std::size_t pos = 0;
    bool first = true;
    std::size_t last_index = 0;
    while (pos < line.size()) {
      const auto end = line.find_first_of(" \t", pos);
      const auto tok = line.substr(pos, end == std::string_view::npos ? end : end - pos);
      pos = end == std::string_view::npos ? line.size() : line.find_first_not_of(" \t", end);
      if (pos == std::string_view::npos) pos = line.size();
      if (first) {
        p.label = parse_label(tok, line_no, opts);
        first = false;
        continue;
      }
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos)
        throw ParseError(line_no, "expected <index>:<value>, got '" + std::string(tok) + "'");
      const auto idx = parse_index(tok.substr(0, colon), line_no);
      if (idx <= last_index)
        throw ParseError(line_no, "feature indices must be strictly increasing");
      last_index = idx;
      entries.emplace_back(idx, parse_double(tok.substr(colon + 1), line_no));
    }
    if (last_index > dim) dim = last_index;
    p.features.assign(last_index, 0.0);
    for (auto [idx, v] : entries) p.features[idx - 1] = v;
    points.push_back(std::move(p));
  }
  return Dataset::create(std::move(points), dim);
}

Dataset parse_libsvm(std::string_view text, const ParseOptions& opts) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in, opts);
}

Dataset load_libsvm(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return parse_libsvm(in, opts);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  char buf[64];
  for (const auto& p : data.points()) {
    out << (p.label == Label::Positive ? "+1" : "-1");
    for (std::size_t j = 0; j < p.features.size(); ++j) {
      if (p.features[j] == 0.0) continue;
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), p.features[j]);
      out << ' ' << (j + 1) << ':' << std::string_view(buf, end - buf);
    }
    out << '\n';
  }
}

std::string to_libsvm(const Dataset& data) {
  std::ostringstream out;
  write_libsvm(out, data);
  return out.str();
}

ClassMatrices split_classes(const Dataset& data) {
  const auto d = static_cast<Eigen::Index>(data.dim());
  ClassMatrices m{Eigen::MatrixXd(d, data.n_positive()), Eigen::MatrixXd(d, data.n_negative())};
  Eigen::Index ip = 0, in = 0;
  for (const auto& p : data.points()) {
    auto col = Eigen::Map<const Eigen::VectorXd>(p.features.data(), d);
    if (p.label == Label::Positive)
      m.positive.col(ip++) = col;
    else
      m.negative.col(in++) = col;
  }
  return m;
}

}  // namespace saddlesvm
