#pragma once

// File formats.
//
// Matrices: MatrixMarket, coordinate or array layout, real/integer/complex
// field, general/symmetric/skew-symmetric/hermitian symmetry. Written as
// "array general" with a version comment.
//
// Vectors: one value per line. Real vectors have one column, complex
// vectors two ("re,im"). An optional leading "# gerk-vector v1 field=..."
// line fixes the field; without it the field follows the column count.
//
// Every writer goes through write_text_atomic (temp file + rename).

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gerk/errors.hpp"
#include "gerk/numeric.hpp"

namespace gerk {

inline constexpr std::string_view kVectorHeader = "# gerk-vector v1";
inline constexpr std::string_view kMatrixComment = "% gerk-matrix v1";

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Writes `content` to `path` via a sibling temp file and rename.
inline void write_text_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec)
    throw Error(ErrorKind::Io, "cannot create directory " +
                                   path.parent_path().string() + ": " +
                                   ec.message());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "write failed: " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot rename to " + path.string());
  }
}

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline bool parse_number(std::string_view tok, double& out) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

inline bool parse_index(std::string_view tok, long long& out) {
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return in;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// MatrixMarket
// ---------------------------------------------------------------------------

struct MatrixData {
  FieldKind field = FieldKind::Real;
  RealMatrix real;
  ComplexMatrix complex;

  Index rows() const {
    return field == FieldKind::Real ? real.rows() : complex.rows();
  }
  Index cols() const {
    return field == FieldKind::Real ? real.cols() : complex.cols();
  }
};

inline MatrixData read_matrix_market(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line))
    throw ParseError(name, 1, "empty file, expected %%MatrixMarket header");
  ++lineno;
  const auto head = detail::split_ws(line);
  if (head.size() != 5 || detail::lower(std::string(head[0])) != "%%matrixmarket")
    throw ParseError(name, lineno,
                     "expected '%%MatrixMarket matrix <format> <field> "
                     "<symmetry>'");
  if (detail::lower(std::string(head[1])) != "matrix")
    throw ParseError(name, lineno, "object must be 'matrix'");
  const std::string format = detail::lower(std::string(head[2]));
  const std::string field = detail::lower(std::string(head[3]));
  const std::string symmetry = detail::lower(std::string(head[4]));
  if (format != "coordinate" && format != "array")
    throw ParseError(name, lineno, "unsupported format '" + format + "'");
  bool is_complex = false;
  if (field == "complex") {
    is_complex = true;
  } else if (field != "real" && field != "double" && field != "integer") {
    throw ParseError(name, lineno, "unsupported field '" + field + "'");
  }
  if (symmetry != "general" && symmetry != "symmetric" &&
      symmetry != "skew-symmetric" && symmetry != "hermitian")
    throw ParseError(name, lineno, "unsupported symmetry '" + symmetry + "'");
  if (symmetry == "hermitian" && !is_complex)
    throw ParseError(name, lineno, "hermitian symmetry needs a complex field");

  // Next non-comment, non-blank line is the size line.
  auto next_data_line = [&](std::string_view& out) -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      const auto t = detail::trim(line);
      if (t.empty() || t.front() == '%') continue;
      out = t;
      return true;
    }
    return false;
  };

  std::string_view data;
  if (!next_data_line(data))
    throw ParseError(name, lineno + 1, "missing size line");
  const auto size_tok = detail::split_ws(data);
  const bool coordinate = format == "coordinate";
  const std::size_t want_size_tokens = coordinate ? 3 : 2;
  long long rows = 0, cols = 0, nnz = 0;
  if (size_tok.size() != want_size_tokens ||
      !detail::parse_index(size_tok[0], rows) ||
      !detail::parse_index(size_tok[1], cols) ||
      (coordinate && !detail::parse_index(size_tok[2], nnz)) || rows < 0 ||
      cols < 0 || nnz < 0)
    throw ParseError(name, lineno, "malformed size line");
  const bool sym = symmetry != "general";
  if (sym && rows != cols)
    throw ParseError(name, lineno, "symmetric storage needs a square matrix");

  ComplexMatrix M = ComplexMatrix::Zero(rows, cols);
  const std::size_t vals = is_complex ? 2 : 1;

  auto read_value = [&](const std::vector<std::string_view>& tok,
                        std::size_t first) -> Complex {
    double re = 0.0, im = 0.0;
    if (!detail::parse_number(tok[first], re) ||
        (is_complex && !detail::parse_number(tok[first + 1], im)))
      throw ParseError(name, lineno, "malformed numeric value");
    return {re, im};
  };
  auto place = [&](long long i, long long j, Complex v) {
    M(i, j) = v;
    if (i == j) return;
    if (symmetry == "symmetric") M(j, i) = v;
    else if (symmetry == "skew-symmetric") M(j, i) = -v;
    else if (symmetry == "hermitian") M(j, i) = std::conj(v);
  };

  if (coordinate) {
    for (long long e = 0; e < nnz; ++e) {
      if (!next_data_line(data))
        throw ParseError(name, lineno + 1,
                         "expected " + std::to_string(nnz) + " entries, got " +
                             std::to_string(e));
      const auto tok = detail::split_ws(data);
      long long i = 0, j = 0;
      if (tok.size() != 2 + vals || !detail::parse_index(tok[0], i) ||
          !detail::parse_index(tok[1], j))
        throw ParseError(name, lineno, "malformed coordinate entry");
      if (i < 1 || i > rows || j < 1 || j > cols)
        throw ParseError(name, lineno, "entry index out of range");
      if (sym && j > i)
        throw ParseError(name, lineno,
                         "symmetric storage lists the lower triangle only");
      place(i - 1, j - 1, read_value(tok, 2));
    }
  } else {
    for (long long j = 0; j < cols; ++j) {
      const long long i0 = sym ? (symmetry == "skew-symmetric" ? j + 1 : j) : 0;
      for (long long i = i0; i < rows; ++i) {
        if (!next_data_line(data))
          throw ParseError(name, lineno + 1, "too few array entries");
        const auto tok = detail::split_ws(data);
        if (tok.size() != vals)
          throw ParseError(name, lineno, "malformed array entry");
        place(i, j, read_value(tok, 0));
      }
    }
  }
  if (next_data_line(data))
    throw ParseError(name, lineno, "unexpected trailing data");

  MatrixData out;
  out.field = is_complex ? FieldKind::Complex : FieldKind::Real;
  if (is_complex) out.complex = std::move(M);
  else out.real = M.real();
  return out;
}

inline MatrixData read_matrix_market(const std::string& path) {
  auto in = detail::open_input(path);
  return read_matrix_market(in, path);
}

template <Field S>
std::string format_matrix_market(const Matrix<S>& M) {
  std::string s = "%%MatrixMarket matrix array ";
  s += is_complex_v<S> ? "complex" : "real";
  s += " general\n";
  s += kMatrixComment;
  s += '\n';
  s += std::to_string(M.rows()) + " " + std::to_string(M.cols()) + "\n";
  for (Index j = 0; j < M.cols(); ++j)
    for (Index i = 0; i < M.rows(); ++i) {
      if constexpr (is_complex_v<S>)
        s += format_double(M(i, j).real()) + " " +
             format_double(M(i, j).imag()) + "\n";
      else
        s += format_double(M(i, j)) + "\n";
    }
  return s;
}

template <Field S>
void write_matrix_market(const std::filesystem::path& path,
                         const Matrix<S>& M) {
  write_text_atomic(path, format_matrix_market<S>(M));
}

// ---------------------------------------------------------------------------
// Vector CSV
// ---------------------------------------------------------------------------

struct VectorData {
  FieldKind field = FieldKind::Real;
  RealVector real;
  ComplexVector complex;

  Index size() const {
    return field == FieldKind::Real ? real.size() : complex.size();
  }
};

inline VectorData read_vector_csv(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t lineno = 0;
  int columns = 0;  // 0 = not yet known
  std::vector<Complex> values;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (!values.empty())
        throw ParseError(name, lineno, "header after data");
      if (t.find("field=complex") != std::string_view::npos) columns = 2;
      else if (t.find("field=real") != std::string_view::npos) columns = 1;
      continue;
    }
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = t.find(',', start);
      cells.push_back(t.substr(start, comma == std::string_view::npos
                                          ? std::string_view::npos
                                          : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    const int n = static_cast<int>(cells.size());
    if (n < 1 || n > 2)
      throw ParseError(name, lineno, "expected 1 (real) or 2 (re,im) columns");
    if (columns == 0) columns = n;
    if (n != columns)
      throw ParseError(name, lineno,
                       "expected " + std::to_string(columns) + " column(s)");
    double re = 0.0, im = 0.0;
    if (!detail::parse_number(cells[0], re) ||
        (n == 2 && !detail::parse_number(cells[1], im)))
      throw ParseError(name, lineno, "malformed numeric value");
    values.emplace_back(re, im);
  }
  VectorData out;
  out.field = columns == 2 ? FieldKind::Complex : FieldKind::Real;
  const auto n = static_cast<Index>(values.size());
  if (out.field == FieldKind::Complex) {
    out.complex.resize(n);
    for (Index i = 0; i < n; ++i) out.complex(i) = values[static_cast<std::size_t>(i)];
  } else {
    out.real.resize(n);
    for (Index i = 0; i < n; ++i) out.real(i) = values[static_cast<std::size_t>(i)].real();
  }
  return out;
}

inline VectorData read_vector_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return read_vector_csv(in, path);
}

template <Field S>
std::string format_vector_csv(const Vector<S>& v) {
  std::string s(kVectorHeader);
  s += is_complex_v<S> ? " field=complex\n" : " field=real\n";
  for (Index i = 0; i < v.size(); ++i) {
    if constexpr (is_complex_v<S>)
      s += format_double(v(i).real()) + "," + format_double(v(i).imag()) + "\n";
    else
      s += format_double(v(i)) + "\n";
  }
  return s;
}

template <Field S>
void write_vector_csv(const std::filesystem::path& path, const Vector<S>& v) {
  write_text_atomic(path, format_vector_csv<S>(v));
}

}  // namespace gerk
