#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "givens/errors.hpp"
#include "givens/matrix.hpp"
#include "givens/minimize.hpp"
#include "givens/streaming.hpp"
#include "givens/tensor.hpp"

namespace givens {

/// Round-trip-safe decimal rendering; all writers below use it so outputs
/// are byte-stable for fixed inputs.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

namespace detail {

inline std::vector<double> parse_numeric_fields(const std::string& line, char sep, long line_no) {
  std::vector<double> fields;
  std::string token;
  std::istringstream ss(line);
  while (std::getline(ss, token, sep)) {
    if (token.find_first_not_of(" \t\r") == std::string::npos) {
      throw data_error("empty field", line_no);
    }
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &pos);
    } catch (const std::exception&) {
      throw data_error("not a number: '" + token + "'", line_no);
    }
    if (token.find_first_not_of(" \t\r", pos) != std::string::npos) {
      throw data_error("trailing characters after number: '" + token + "'", line_no);
    }
    fields.push_back(v);
  }
  return fields;
}

}  // namespace detail

/// Plain numeric CSV; every non-empty line is one matrix row.
inline Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open input file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = detail::parse_numeric_fields(line, ',', line_no);
    if (!rows.empty() && fields.size() != rows.front().size()) {
      throw data_error("row has " + std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(rows.front().size()),
                       line_no);
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw data_error("no data rows in " + path);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return m;
}

inline void write_csv_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open output file: " + path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

struct TensorFile {
  int dim = 0;
  std::vector<double> values;  // d^3 entries, first index slowest
};

/// Text tensor format: first line is the dimension, then d^3 whitespace
/// separated values in (a,b,c) order with a slowest.
inline TensorFile read_tensor_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open input file: " + path);
  std::string line;
  long line_no = 0;
  TensorFile out;
  // header
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    if (!(ss >> out.dim) || out.dim < 1) throw data_error("bad tensor dimension", line_no);
    std::string rest;
    if (ss >> rest) throw data_error("unexpected token after dimension", line_no);
    break;
  }
  if (out.dim == 0) throw data_error("missing tensor dimension in " + path);
  const std::size_t expected =
      static_cast<std::size_t>(out.dim) * out.dim * out.dim;
  out.values.reserve(expected);
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string token;
    while (ss >> token) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &pos);
      } catch (const std::exception&) {
        throw data_error("not a number: '" + token + "'", line_no);
      }
      if (pos != token.size()) throw data_error("bad value: '" + token + "'", line_no);
      if (out.values.size() == expected) throw data_error("more than d^3 values", line_no);
      out.values.push_back(v);
    }
  }
  if (out.values.size() != expected) {
    throw data_error("expected " + std::to_string(expected) + " values, found " +
                     std::to_string(out.values.size()) + " in " + path);
  }
  return out;
}

inline void write_tensor_file(const std::string& path, const SymmetricTensor3& t) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open output file: " + path);
  const int d = t.dim();
  out << d << '\n';
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      for (int c = 0; c < d; ++c) {
        if (c) out << ' ';
        out << format_double(t(a, b, c));
      }
      out << '\n';
    }
  }
}

/// Machine-readable run trace. Written row by row in iteration order; the
/// support column appears only when the solver recorded it.
inline void write_trace_tsv(const std::string& path, const DescentTrace& trace) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open output file: " + path);
  const bool with_support =
      !trace.records.empty() && trace.records.front().nnz.has_value();
  out << "iteration\tobjective\tcumulative_flops";
  if (with_support) out << "\tnnz";
  out << '\n';
  for (const auto& rec : trace.records) {
    out << rec.iteration << '\t' << format_double(rec.objective) << '\t' << rec.flops;
    if (with_support) out << '\t' << (rec.nnz ? *rec.nnz : -1);
    out << '\n';
  }
}

struct TraceRow {
  std::uint64_t iteration = 0;
  double objective = 0.0;
  std::uint64_t flops = 0;
  std::optional<std::int64_t> nnz;
};

inline std::vector<TraceRow> read_trace_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open input file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty trace file: " + path);
  const bool with_support = line.find("\tnnz") != std::string::npos;
  std::vector<TraceRow> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    TraceRow row;
    if (!(ss >> row.iteration >> row.objective >> row.flops)) {
      throw data_error("bad trace row", line_no);
    }
    if (with_support) {
      std::int64_t nnz = 0;
      if (!(ss >> nnz)) throw data_error("missing support column", line_no);
      row.nnz = nnz;
    }
    rows.push_back(row);
  }
  return rows;
}

/// Lazy sample stream over a CSV file in which every row is one observation.
class CsvRowStream final : public SampleStream {
 public:
  explicit CsvRowStream(const std::string& path) : in_(path), path_(path) {
    if (!in_) throw data_error("cannot open input file: " + path);
    first_ = read_row();
    if (!first_) throw data_error("no data rows in " + path);
    dim_ = static_cast<int>(first_->size());
  }

  int dimension() const override { return dim_; }

  std::optional<Vector> next() override {
    std::optional<Vector> row;
    if (first_) {
      row = std::move(first_);
      first_.reset();
    } else {
      row = read_row();
    }
    if (row) {
      if (row->size() != dim_) {
        throw data_error("sample with " + std::to_string(row->size()) + " fields, expected " +
                             std::to_string(dim_),
                         line_no_);
      }
      ++pos_;
    }
    return row;
  }

  std::uint64_t position() const override { return pos_; }

 private:
  std::optional<Vector> read_row() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto fields = detail::parse_numeric_fields(line, ',', line_no_);
      Vector v(static_cast<Eigen::Index>(fields.size()));
      for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = fields[static_cast<std::size_t>(k)];
      return v;
    }
    return std::nullopt;
  }

  std::ifstream in_;
  std::string path_;
  std::optional<Vector> first_;
  int dim_ = 0;
  std::uint64_t pos_ = 0;
  long line_no_ = 0;
};

/// Number of non-empty lines; used to size early-stop budgets up front.
inline std::uint64_t count_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open input file: " + path);
  std::uint64_t n = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) ++n;
  }
  return n;
}

}  // namespace givens
