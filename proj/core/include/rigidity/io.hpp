#pragma once

// Text formats for matrices and certificates.
//
// Matrix file:
//   field: Fp 5            (or "field: Q")
//   rows: 4
//   cols: 4
//   format: dense          (row-major entries, one row per line)
//   format: sparse         ("i j value" triplets, 0-based)
//
// Certificate file:
//   certificate: 1
//   field: ...  rows: ...  cols: ...  claimed_rank: ...  claimed_sparsity: ...
//   lowrank: zero | support | factored | explicit | residual
//   support_rows: <count> / support_cols: <count>, followed by the indices
//   u: / v: / e: / z: <rows> <cols> <nnz>, followed by nnz triplets
//
// '#' starts a comment anywhere on a line.  Rendering is canonical, so
// render(parse(text)) == text for every rendered file.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rigidity/cert.hpp"
#include "rigidity/field.hpp"
#include "rigidity/matrix.hpp"

namespace rigidity {

enum class MatrixFormat { dense, sparse };

struct MatrixHeader {
  FieldSpec field;
  std::size_t rows = 0;
  std::size_t cols = 0;
  MatrixFormat format = MatrixFormat::dense;
};

namespace io_detail {

/// Non-empty, comment-stripped lines with their 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::string_view text);

  bool done() const { return pos_ >= lines_.size(); }
  std::size_t line_number() const;
  const std::string& peek() const;
  std::string next();

  /// Reads "key: value" and checks the key.
  std::string expect_key(std::string_view key);
  std::size_t expect_size(std::string_view key);
  /// Whitespace-separated tokens of the next line.
  std::vector<std::string> next_tokens();

  [[noreturn]] void fail(const std::string& what) const;

 private:
  std::vector<std::pair<std::size_t, std::string>> lines_;
  std::size_t pos_ = 0;
};

std::size_t parse_index(const std::string& token, std::size_t bound, const LineReader& in);
std::vector<std::string> split_ws(std::string_view s);

template <ExactField F>
typename F::Element parse_value(const F& f, const std::string& token, const LineReader& in) {
  try {
    return f.parse(token);
  } catch (const Error& e) {
    in.fail("bad value '" + token + "': " + e.what());
  }
}

/// "<rows> <cols> <nnz>" followed by nnz triplet lines; rejects duplicates.
template <ExactField F>
SparseMatrix<F> read_block(LineReader& in, const F& f, std::string_view key) {
  const auto head = split_ws(in.expect_key(key));
  if (head.size() != 3) in.fail(std::string(key) + ": expected '<rows> <cols> <nnz>'");
  const std::size_t rows = parse_index(head[0], 0, in);
  const std::size_t cols = parse_index(head[1], 0, in);
  const std::size_t nnz = parse_index(head[2], 0, in);
  std::vector<Triplet<F>> entries;
  entries.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    if (in.done()) in.fail(std::string(key) + ": expected " + std::to_string(nnz) + " triplets");
    const auto tok = in.next_tokens();
    if (tok.size() != 3) in.fail("expected 'i j value'");
    const std::size_t i = parse_index(tok[0], rows, in), j = parse_index(tok[1], cols, in);
    auto v = parse_value(f, tok[2], in);
    if (f.is_zero(v)) in.fail("explicit zero entry at (" + tok[0] + "," + tok[1] + ")");
    entries.push_back({i, j, std::move(v)});
  }
  auto m = SparseMatrix<F>::from_triplets(f, rows, cols, entries);
  if (m.nnz() != nnz) in.fail(std::string(key) + ": duplicate triplets");
  return m;
}

template <ExactField F>
void write_block(std::string& out, std::string_view key, const SparseMatrix<F>& m) {
  const F& f = m.field();
  out += std::string(key) + ": " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + " " +
         std::to_string(m.nnz()) + "\n";
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = m.row_begin(i); k < m.row_end(i); ++k)
      out += std::to_string(i) + " " + std::to_string(m.col_at(k)) + " " + f.to_string(m.value_at(k)) + "\n";
}

std::vector<std::size_t> read_index_list(LineReader& in, std::string_view key, std::size_t bound);
void write_index_list(std::string& out, std::string_view key, const std::vector<std::size_t>& idx);

MatrixHeader read_matrix_header(LineReader& in);

template <ExactField F>
void check_field(const F& f, const FieldSpec& spec, const LineReader& in) {
  if (!(spec_of(f) == spec)) in.fail("file field " + spec.to_string() + " does not match " + f.name());
}

}  // namespace io_detail

MatrixHeader read_matrix_header(std::string_view text);
/// Field named by a certificate file.
FieldSpec read_cert_field(std::string_view text);

template <ExactField F>
SparseMatrix<F> parse_matrix(std::string_view text, const F& f) {
  io_detail::LineReader in(text);
  const auto h = io_detail::read_matrix_header(in);
  io_detail::check_field(f, h.field, in);
  if (h.format == MatrixFormat::sparse) {
    std::vector<Triplet<F>> entries;
    while (!in.done()) {
      const auto tok = in.next_tokens();
      if (tok.size() != 3) in.fail("expected 'i j value'");
      const std::size_t i = io_detail::parse_index(tok[0], h.rows, in);
      const std::size_t j = io_detail::parse_index(tok[1], h.cols, in);
      auto v = io_detail::parse_value(f, tok[2], in);
      if (!f.is_zero(v)) entries.push_back({i, j, std::move(v)});
    }
    const std::size_t given = entries.size();
    auto m = SparseMatrix<F>::from_triplets(f, h.rows, h.cols, std::move(entries));
    if (m.nnz() != given) throw ParseError("duplicate triplets");
    return m;
  }
  typename SparseMatrix<F>::RowBuilder b(f, h.rows, h.cols);
  for (std::size_t i = 0; i < h.rows; ++i) {
    if (in.done()) in.fail("expected " + std::to_string(h.rows) + " rows, got " + std::to_string(i));
    const auto tok = in.next_tokens();
    if (tok.size() != h.cols)
      in.fail("row " + std::to_string(i) + " has " + std::to_string(tok.size()) + " entries, expected " +
              std::to_string(h.cols));
    for (std::size_t j = 0; j < h.cols; ++j) b.push(j, io_detail::parse_value(f, tok[j], in));
    b.end_row();
  }
  if (!in.done()) in.fail("trailing data after " + std::to_string(h.rows) + " rows");
  return b.finish();
}

template <ExactField F>
std::string render_matrix(const SparseMatrix<F>& m, MatrixFormat format) {
  const F& f = m.field();
  std::string out = "field: " + spec_of(f).to_string() + "\nrows: " + std::to_string(m.rows()) +
                    "\ncols: " + std::to_string(m.cols()) + "\nformat: " +
                    (format == MatrixFormat::dense ? "dense" : "sparse") + "\n";
  if (format == MatrixFormat::sparse) {
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t k = m.row_begin(i); k < m.row_end(i); ++k)
        out += std::to_string(i) + " " + std::to_string(m.col_at(k)) + " " + f.to_string(m.value_at(k)) + "\n";
    return out;
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::size_t k = m.row_begin(i);
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ' ';
      if (k < m.row_end(i) && m.col_at(k) == j) out += f.to_string(m.value_at(k++));
      else out += '0';
    }
    out += '\n';
  }
  return out;
}

template <ExactField F>
std::string render_matrix(const DenseMatrix<F>& m, MatrixFormat format) {
  return render_matrix(SparseMatrix<F>::from_dense(m), format);
}

template <ExactField F>
std::string render_cert(const Cert<F>& c) {
  std::string out = "certificate: 1\nfield: " + spec_of(c.field).to_string() + "\nrows: " + std::to_string(c.rows) +
                    "\ncols: " + std::to_string(c.cols) + "\nclaimed_rank: " + std::to_string(c.claimed_rank) +
                    "\nclaimed_sparsity: " + std::to_string(c.claimed_sparsity) + "\nlowrank: " + c.kind() + "\n";
  if (const auto* s = std::get_if<SupportPart>(&c.low)) {
    io_detail::write_index_list(out, "support_rows", s->rows);
    io_detail::write_index_list(out, "support_cols", s->cols);
  } else if (const auto* fp = std::get_if<FactoredPart<F>>(&c.low)) {
    io_detail::write_block(out, "u", fp->u);
    io_detail::write_block(out, "v", fp->v);
  } else if (const auto* ep = std::get_if<ExplicitPart<F>>(&c.low)) {
    io_detail::write_block(out, "e", ep->e);
  }
  io_detail::write_block(out, "z", c.z);
  return out;
}

/// Parsed certificates carry no target; verify them against one explicitly.
template <ExactField F>
Cert<F> parse_cert(std::string_view text, const F& f) {
  io_detail::LineReader in(text);
  if (in.expect_key("certificate") != "1") in.fail("unsupported certificate version");
  io_detail::check_field(f, FieldSpec::parse(in.expect_key("field")), in);
  Cert<F> c{f, 0, 0, nullptr, ZeroPart{}, SparseMatrix<F>(f, 0, 0), 0, 0};
  c.rows = in.expect_size("rows");
  c.cols = in.expect_size("cols");
  c.claimed_rank = in.expect_size("claimed_rank");
  c.claimed_sparsity = in.expect_size("claimed_sparsity");
  const auto kind = in.expect_key("lowrank");
  auto check_shape = [&](const SparseMatrix<F>& m, std::size_t r, std::size_t cl, const char* what) {
    if (m.rows() != r || m.cols() != cl) in.fail(std::string(what) + " has the wrong shape");
  };
  if (kind == "zero") {
    c.low = ZeroPart{};
  } else if (kind == "support") {
    SupportPart s;
    s.rows = io_detail::read_index_list(in, "support_rows", c.rows);
    s.cols = io_detail::read_index_list(in, "support_cols", c.cols);
    c.low = std::move(s);
  } else if (kind == "factored") {
    auto u = io_detail::read_block(in, f, "u");
    auto v = io_detail::read_block(in, f, "v");
    check_shape(u, c.rows, u.cols(), "u");
    check_shape(v, u.cols(), c.cols, "v");
    c.low = FactoredPart<F>{std::move(u), std::move(v)};
  } else if (kind == "explicit") {
    auto e = io_detail::read_block(in, f, "e");
    check_shape(e, c.rows, c.cols, "e");
    c.low = ExplicitPart<F>{std::move(e)};
  } else if (kind == "residual") {
    c.low = ResidualPart{};
  } else {
    in.fail("unknown lowrank kind '" + kind + "'");
  }
  c.z = io_detail::read_block(in, f, "z");
  check_shape(c.z, c.rows, c.cols, "z");
  if (!in.done()) in.fail("trailing data");
  return c;
}

/// Same kind, claims and matrices.  Targets are not compared.
template <ExactField F>
bool same_cert(const Cert<F>& a, const Cert<F>& b) {
  if (!(a.field == b.field) || a.rows != b.rows || a.cols != b.cols || a.claimed_rank != b.claimed_rank ||
      a.claimed_sparsity != b.claimed_sparsity || a.low.index() != b.low.index() || !(a.z == b.z))
    return false;
  if (const auto* s = std::get_if<SupportPart>(&a.low)) {
    const auto& t = std::get<SupportPart>(b.low);
    return s->rows == t.rows && s->cols == t.cols;
  }
  if (const auto* fp = std::get_if<FactoredPart<F>>(&a.low)) {
    const auto& gp = std::get<FactoredPart<F>>(b.low);
    return fp->u == gp.u && fp->v == gp.v;
  }
  if (const auto* ep = std::get_if<ExplicitPart<F>>(&a.low)) return ep->e == std::get<ExplicitPart<F>>(b.low).e;
  return true;
}

/// Reads a whole file; throws Error naming the path on failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace rigidity
