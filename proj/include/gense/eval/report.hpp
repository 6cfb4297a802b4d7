// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gense/config_text.hpp"
#include "gense/error.hpp"

namespace gense::eval {

struct UtteranceMetrics {
  std::string id;
  double si_snr_db = 0;
  double lsd_db = 0;
  double token_accuracy = 0;
  int chosen = 0;                        // selected candidate
  std::vector<double> candidate_scores;  // mean per-frame log-probability
};

struct Aggregate {
  double si_snr_db = 0, lsd_db = 0, token_accuracy = 0;
  int count = 0;
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw FormatError("report: bad number '" + s + "'");
  return v;
}

// Per-utterance rows plus a summary block. Aggregates are arithmetic means
// over the rows, skipping undefined (NaN) entries column by column.
struct MetricReport {
  static constexpr const char* kColumns = "id\tsi_snr_db\tlsd_db\ttoken_accuracy\tchosen\tcandidate_scores";

  std::string variant;
  uint64_t seed = 0;
  std::vector<UtteranceMetrics> rows;

  Aggregate aggregate() const {
    Aggregate a;
    a.count = static_cast<int>(rows.size());
    a.si_snr_db = mean_of([](const UtteranceMetrics& u) { return u.si_snr_db; });
    a.lsd_db = mean_of([](const UtteranceMetrics& u) { return u.lsd_db; });
    a.token_accuracy = mean_of([](const UtteranceMetrics& u) { return u.token_accuracy; });
    return a;
  }

  std::string to_text() const {
    std::ostringstream os;
    os << kColumns << "\n";
    for (const auto& r : rows) {
      os << r.id << "\t" << format_double(r.si_snr_db) << "\t" << format_double(r.lsd_db) << "\t"
         << format_double(r.token_accuracy) << "\t" << r.chosen << "\t";
      for (size_t i = 0; i < r.candidate_scores.size(); ++i)
        os << (i ? "," : "") << format_double(r.candidate_scores[i]);
      os << "\n";
    }
    const auto a = aggregate();
    os << "# variant\t" << variant << "\n# seed\t" << seed << "\n# utterances\t" << a.count
       << "\n# mean_si_snr_db\t" << format_double(a.si_snr_db) << "\n# mean_lsd_db\t" << format_double(a.lsd_db)
       << "\n# mean_token_accuracy\t" << format_double(a.token_accuracy) << "\n";
    return os.str();
  }

  void write(const std::string& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write report '" + path + "'");
    os << to_text();
  }

  static MetricReport parse(const std::string& text) {
    MetricReport r;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kColumns) throw FormatError("report has an unexpected header line");
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto f = config::split(line, '\t');
      if (line[0] == '#') {
        if (f.size() != 2) throw FormatError("bad report summary line: " + line);
        if (f[0] == "# variant") r.variant = f[1];
        if (f[0] == "# seed") r.seed = std::strtoull(f[1].c_str(), nullptr, 10);
        continue;
      }
      if (f.size() != 5 && f.size() != 6) throw FormatError("report row has " + std::to_string(f.size()) + " fields: " + line);
      UtteranceMetrics u;
      u.id = f[0];
      u.si_snr_db = parse_double(f[1]);
      u.lsd_db = parse_double(f[2]);
      u.token_accuracy = parse_double(f[3]);
      u.chosen = static_cast<int>(parse_double(f[4]));
      if (f.size() == 6 && !f[5].empty())
        for (const auto& s : config::split(f[5], ',')) u.candidate_scores.push_back(parse_double(s));
      r.rows.push_back(std::move(u));
    }
    return r;
  }

  static MetricReport read(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open report '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
  }

 private:
  template <class F>
  double mean_of(F f) const {
    double s = 0;
    int n = 0;
    for (const auto& r : rows) {
      const double v = f(r);
      if (std::isnan(v)) continue;
      s += v;
      ++n;
    }
    return n ? s / n : std::nan("");
  }
};

}  // namespace gense::eval
