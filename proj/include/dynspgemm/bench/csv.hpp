// Copyright 2026 The dynspgemm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dynspgemm/bench/experiment.hpp"

namespace dynspgemm::bench {

inline constexpr std::string_view csv_header =
    "experiment,seed,q,T,batch_size,batch_idx,phase,seconds,bytes,batch_seconds,nnz_a,nnz_b,nnz_update,nnz_c,nnz_ar";

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class T>
T parse_field(const std::string& s, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ParseError("csv", line, "bad numeric field '" + s + "'");
  return v;
}

}  // namespace detail

/// One row per (batch, phase), records in input order and phases in their fixed order.
inline void write_csv(const std::vector<MetricsRecord>& records, std::ostream& out) {
  out << csv_header << '\n';
  for (const MetricsRecord& r : records) {
    for (Phase ph : all_phases) {
      out << r.experiment << ',' << r.seed << ',' << r.q << ',' << r.workers << ',' << r.batch_size << ',' << r.batch_idx
          << ',' << phase_name(ph) << ',' << detail::format_double(r.phases.time(ph)) << ',' << r.phases.volume(ph) << ','
          << detail::format_double(r.batch_seconds) << ',' << r.nnz_a << ',' << r.nnz_b << ',' << r.nnz_update << ','
          << r.nnz_c << ',' << r.nnz_ar << '\n';
    }
  }
}

inline void emit_csv(const std::vector<MetricsRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing: " + std::strerror(errno));
  write_csv(records, out);
  out.flush();
  if (!out) throw std::runtime_error("write to " + path + " failed: " + std::strerror(errno));
}

/// Inverse of write_csv.
inline std::vector<MetricsRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != csv_header) throw ParseError("csv", 1, "unexpected header");
  std::vector<MetricsRecord> records;
  std::size_t lineno = 1;
  std::size_t phase_pos = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 15) throw ParseError("csv", lineno, "expected 15 fields, found " + std::to_string(f.size()));
    if (f[6] != phase_name(all_phases[phase_pos])) throw ParseError("csv", lineno, "unexpected phase '" + f[6] + "'");
    if (phase_pos == 0) {
      MetricsRecord r;
      r.experiment = f[0];
      r.seed = detail::parse_field<std::uint64_t>(f[1], lineno);
      r.q = detail::parse_field<int>(f[2], lineno);
      r.workers = detail::parse_field<int>(f[3], lineno);
      r.batch_size = detail::parse_field<std::uint64_t>(f[4], lineno);
      r.batch_idx = detail::parse_field<int>(f[5], lineno);
      r.batch_seconds = detail::parse_field<double>(f[9], lineno);
      r.nnz_a = detail::parse_field<std::uint64_t>(f[10], lineno);
      r.nnz_b = detail::parse_field<std::uint64_t>(f[11], lineno);
      r.nnz_update = detail::parse_field<std::uint64_t>(f[12], lineno);
      r.nnz_c = detail::parse_field<std::uint64_t>(f[13], lineno);
      r.nnz_ar = detail::parse_field<std::uint64_t>(f[14], lineno);
      records.push_back(std::move(r));
    }
    MetricsRecord& r = records.back();
    r.phases.time(all_phases[phase_pos]) = detail::parse_field<double>(f[7], lineno);
    r.phases.volume(all_phases[phase_pos]) = detail::parse_field<std::uint64_t>(f[8], lineno);
    phase_pos = (phase_pos + 1) % all_phases.size();
  }
  if (phase_pos != 0) throw ParseError("csv", lineno, "truncated record");
  return records;
}

inline std::vector<MetricsRecord> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_csv(in);
}

}  // namespace dynspgemm::bench
