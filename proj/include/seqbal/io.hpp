#pragma once

#include <cstdio>
#include <istream>
#include <locale>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "seqbal/core.hpp"
#include "seqbal/error.hpp"

namespace seqbal {

/// 12 significant digits, '.' decimal point regardless of locale.
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  std::string s(buf);
  for (auto& ch : s) {
    if (ch == ',') ch = '.';
  }
  return s;
}

inline double parse_number(const std::string& s) {
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double v;
  in >> v;
  if (!in || !(in >> std::ws).eof()) throw Error(ErrorCode::parse_error, "not a number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

/// `# key=value` provenance lines.
inline void write_header(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& meta) {
  for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
}

/// Header `c1..cp,d1..dq`, one subject per row.
inline void write_sequence_csv(std::ostream& out, const ArrivalSequence& seq) {
  std::string sep;
  for (std::size_t i = 1; i <= seq.space.p(); ++i, sep = ",") out << sep << 'c' << i;
  for (std::size_t i = 1; i <= seq.space.q(); ++i, sep = ",") out << sep << 'd' << i;
  out << '\n';
  for (const auto& x : seq.subjects) {
    for (std::size_t i = 0; i < x.dim(); ++i) out << (i ? "," : "") << format_number(x[i]);
    out << '\n';
  }
}

/// Reads the instance format. Lines starting with '#' are skipped. Discrete
/// supports are taken as the distinct values present in each column unless
/// `supports` is given.
inline ArrivalSequence read_sequence_csv(std::istream& in,
                                         const std::optional<std::vector<std::vector<double>>>& supports = std::nullopt) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split(line, ',');
    break;
  }
  if (header.empty()) throw Error(ErrorCode::parse_error, "missing header row");
  std::size_t p = 0, q = 0;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& h = header[i];
    if (h.size() < 2 || (h[0] != 'c' && h[0] != 'd')) throw Error(ErrorCode::parse_error, "bad column name '" + h + "'");
    const bool cont = h[0] == 'c';
    if (cont && q > 0) throw Error(ErrorCode::parse_error, "continuous columns must precede discrete ones");
    const std::size_t expect = cont ? p + 1 : q + 1;
    if (h.substr(1) != std::to_string(expect)) throw Error(ErrorCode::parse_error, "unexpected column '" + h + "'");
    (cont ? p : q) += 1;
  }
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    const auto cells = split(line, ',');
    if (cells.size() != p + q) throw Error(ErrorCode::parse_error, "row " + std::to_string(lineno) + " has wrong width");
    std::vector<double> r;
    for (const auto& c : cells) r.push_back(parse_number(c));
    rows.push_back(std::move(r));
  }
  std::vector<std::vector<double>> sup;
  if (supports) {
    sup = *supports;
  } else {
    sup.resize(q);
    for (std::size_t j = 0; j < q; ++j) {
      std::set<double> vals;
      for (const auto& r : rows) vals.insert(r[p + j]);
      sup[j].assign(vals.begin(), vals.end());
      if (sup[j].empty()) sup[j].push_back(0.0);
    }
  }
  ArrivalSequence seq{CovariateSpace(p, std::move(sup)), {}};
  for (auto& r : rows) seq.subjects.push_back(Subject::flat(std::move(r), p));
  return seq;
}

/// Points separated by ';', coordinates by ','. All coordinates continuous.
inline std::vector<Subject> parse_inline_points(const std::string& s) {
  std::vector<Subject> out;
  for (const auto& tok : split(s, ';')) {
    if (tok.empty()) continue;
    std::vector<double> c;
    for (const auto& v : split(tok, ',')) c.push_back(parse_number(v));
    out.emplace_back(std::move(c));
  }
  return out;
}

}  // namespace seqbal
