#include "rigidity/io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace rigidity {
namespace io_detail {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

LineReader::LineReader(std::string_view text) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) lines_.emplace_back(lineno, std::string(line));
  }
}

std::size_t LineReader::line_number() const {
  if (pos_ < lines_.size()) return lines_[pos_].first;
  return lines_.empty() ? 0 : lines_.back().first;
}

const std::string& LineReader::peek() const {
  if (done()) fail("unexpected end of input");
  return lines_[pos_].second;
}

std::string LineReader::next() {
  const std::string& s = peek();
  ++pos_;
  return s;
}

std::string LineReader::expect_key(std::string_view key) {
  if (done()) fail("unexpected end of input, expected '" + std::string(key) + ":'");
  const std::string& line = peek();
  const auto colon = line.find(':');
  if (colon == std::string::npos || trim(std::string_view(line).substr(0, colon)) != key)
    fail("expected '" + std::string(key) + ":', got '" + line + "'");
  std::string value(trim(std::string_view(line).substr(colon + 1)));
  ++pos_;
  return value;
}

std::size_t LineReader::expect_size(std::string_view key) {
  const std::size_t at = pos_;
  const auto value = expect_key(key);
  pos_ = at;  // report errors at the key's line
  const auto n = parse_index(value, 0, *this);
  ++pos_;
  return n;
}

std::vector<std::string> LineReader::next_tokens() { return split_ws(next()); }

void LineReader::fail(const std::string& what) const {
  throw ParseError("line " + std::to_string(pos_ < lines_.size() ? lines_[pos_].first : line_number()) + ": " + what);
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::size_t parse_index(const std::string& token, std::size_t bound, const LineReader& in) {
  if (token.empty() || token.size() > 18) in.fail("bad index '" + token + "'");
  std::size_t v = 0;
  for (char ch : token) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) in.fail("bad index '" + token + "'");
    v = v * 10 + static_cast<std::size_t>(ch - '0');
  }
  if (bound != 0 && v >= bound) in.fail("index " + token + " out of range [0, " + std::to_string(bound) + ")");
  return v;
}

std::vector<std::size_t> read_index_list(LineReader& in, std::string_view key, std::size_t bound) {
  const std::size_t count = in.expect_size(key);
  std::vector<std::size_t> idx;
  idx.reserve(count);
  while (idx.size() < count) {
    if (in.done()) in.fail(std::string(key) + ": expected " + std::to_string(count) + " indices");
    for (const auto& t : in.next_tokens()) idx.push_back(parse_index(t, bound, in));
  }
  if (idx.size() != count) in.fail(std::string(key) + ": too many indices");
  return idx;
}

void write_index_list(std::string& out, std::string_view key, const std::vector<std::size_t>& idx) {
  out += std::string(key) + ": " + std::to_string(idx.size()) + "\n";
  // 32 per line keeps large supports diffable
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out += std::to_string(idx[i]);
    out += (i + 1 == idx.size() || (i + 1) % 32 == 0) ? '\n' : ' ';
  }
}

MatrixHeader read_matrix_header(LineReader& in) {
  MatrixHeader h;
  const auto field = in.expect_key("field");
  try {
    h.field = FieldSpec::parse(field);
  } catch (const ParseError& e) {
    throw ParseError("field line: " + std::string(e.what()));
  }
  h.rows = in.expect_size("rows");
  h.cols = in.expect_size("cols");
  const auto fmt = in.expect_key("format");
  if (fmt == "dense") h.format = MatrixFormat::dense;
  else if (fmt == "sparse") h.format = MatrixFormat::sparse;
  else in.fail("format must be 'dense' or 'sparse', got '" + fmt + "'");
  return h;
}

}  // namespace io_detail

MatrixHeader read_matrix_header(std::string_view text) {
  io_detail::LineReader in(text);
  return io_detail::read_matrix_header(in);
}

FieldSpec read_cert_field(std::string_view text) {
  io_detail::LineReader in(text);
  if (in.expect_key("certificate") != "1") in.fail("unsupported certificate version");
  const auto value = in.expect_key("field");
  return FieldSpec::parse(value);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write '" + path + "'");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw Error("write failed for '" + path + "'");
}

}  // namespace rigidity
