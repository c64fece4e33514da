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

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dynspgemm/redistribute.hpp"

namespace dynspgemm::bench {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

enum class GraphFormat { edge_list, matrix_market };

/// Matrix Market for *.mtx, whitespace-separated edge list otherwise.
inline GraphFormat detect_format(std::string_view path) {
  return path.size() >= 4 && path.substr(path.size() - 4) == ".mtx" ? GraphFormat::matrix_market : GraphFormat::edge_list;
}

template <class V>
struct EdgeData {
  std::vector<UpdateTuple<V>> tuples;
  global_index n_rows = 0;
  global_index n_cols = 0;
};

namespace detail {

inline std::string_view trim_left(std::string_view s) {
  const auto p = s.find_first_not_of(" \t\r");
  return p == std::string_view::npos ? std::string_view{} : s.substr(p);
}

/// Parses the next unsigned integer field; returns false at end of line.
inline bool next_uint(std::string_view& s, std::uint64_t& out) {
  s = trim_left(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || (ptr != s.data() + s.size() && *ptr != ' ' && *ptr != '\t' && *ptr != '\r')) {
    throw std::invalid_argument("expected a non-negative integer");
  }
  s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
  return true;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

template <class V>
void add_undirected(EdgeData<V>& g, global_index u, global_index v, V value) {
  g.tuples.push_back(UpdateTuple<V>::upsert(u, v, value));
  if (u != v) g.tuples.push_back(UpdateTuple<V>::upsert(v, u, value));
}

}  // namespace detail

/**
 * Reads an undirected graph as a symmetric adjacency matrix: each edge {u, v}
 * yields (u, v) and (v, u), a self-loop yields one tuple. Every tuple carries
 * `value`; weights present in the file are parsed and ignored.
 *
 * Edge lists hold 0-based "u v [weight]" lines with '#' or '%' comments and
 * dimensions 1 + max index. Matrix Market files must be coordinate
 * general/symmetric with pattern, real or integer fields, 1-based.
 */
template <class V>
EdgeData<V> load_edges(const std::string& path, GraphFormat format, V value) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  EdgeData<V> g;
  std::string line;
  std::size_t lineno = 0;

  if (format == GraphFormat::edge_list) {
    global_index max_index = 0;
    bool any = false;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view s = detail::trim_left(line);
      if (s.empty() || s[0] == '#' || s[0] == '%') continue;
      std::uint64_t u = 0, v = 0;
      try {
        if (!detail::next_uint(s, u) || !detail::next_uint(s, v)) throw std::invalid_argument("expected two vertex ids");
      } catch (const std::invalid_argument& e) {
        throw ParseError(path, lineno, e.what());
      }
      max_index = std::max({max_index, u, v});
      any = true;
      detail::add_undirected(g, u, v, value);
    }
    g.n_rows = g.n_cols = any ? max_index + 1 : 0;
    return g;
  }

  // Matrix Market banner.
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty file");
  lineno = 1;
  const std::string banner = detail::lower(line);
  if (banner.rfind("%%matrixmarket", 0) != 0) throw ParseError(path, 1, "missing %%MatrixMarket banner");
  if (banner.find(" coordinate") == std::string::npos) throw ParseError(path, 1, "only coordinate format is supported");
  if (banner.find(" complex") != std::string::npos) throw ParseError(path, 1, "complex fields are not supported");
  const bool symmetric = banner.find(" symmetric") != std::string::npos;
  if (!symmetric && banner.find(" general") == std::string::npos) {
    throw ParseError(path, 1, "only general and symmetric matrices are supported");
  }

  std::uint64_t rows = 0, cols = 0, declared = 0;
  bool have_size = false;
  std::uint64_t seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = detail::trim_left(line);
    if (s.empty() || s[0] == '%') continue;
    try {
      if (!have_size) {
        if (!detail::next_uint(s, rows) || !detail::next_uint(s, cols) || !detail::next_uint(s, declared)) {
          throw std::invalid_argument("expected 'rows cols entries'");
        }
        have_size = true;
        continue;
      }
      std::uint64_t i = 0, j = 0;
      if (!detail::next_uint(s, i) || !detail::next_uint(s, j)) throw std::invalid_argument("expected 'row col [value]'");
      if (i == 0 || j == 0 || i > rows || j > cols) {
        throw std::invalid_argument("entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside declared " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
      }
      if (++seen > declared) throw std::invalid_argument("more entries than declared");
      detail::add_undirected(g, i - 1, j - 1, value);
    } catch (const std::invalid_argument& e) {
      throw ParseError(path, lineno, e.what());
    }
  }
  if (!have_size) throw ParseError(path, lineno, "missing size line");
  if (seen != declared) {
    throw ParseError(path, lineno, "declared " + std::to_string(declared) + " entries, found " + std::to_string(seen));
  }
  // Symmetrization makes the adjacency square even for rectangular inputs.
  g.n_rows = g.n_cols = std::max(rows, cols);
  return g;
}

}  // namespace dynspgemm::bench
