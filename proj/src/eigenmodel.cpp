#include "wevbg/eigenmodel.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "wevbg/errors.hpp"

namespace wevbg {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::size_t parse_count(std::string_view s, std::string_view context) {
  s = trim(s);
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(ErrorKind::SelectionError, "invalid number '" + std::string(s) + "' in " + std::string(context));
  }
  return value;
}

// Appends one index item ("7" or "24-30") to `out`.
void parse_index_item(std::string_view item, std::vector<std::size_t>& out) {
  item = trim(item);
  const auto dash = item.find('-');
  if (dash == std::string_view::npos) {
    out.push_back(parse_count(item, "idx selection"));
    return;
  }
  const std::size_t first = parse_count(item.substr(0, dash), "idx range");
  const std::size_t last = parse_count(item.substr(dash + 1), "idx range");
  if (last < first) fail(ErrorKind::SelectionError, "descending idx range '" + std::string(item) + "'");
  for (std::size_t i = first; i <= last; ++i) out.push_back(i);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

constexpr std::array<char, 8> kMagic = {'W', 'E', 'V', 'B', 'G', 'B', 'M', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> bytes{};
  for (int i = 0; i < 4; ++i) bytes[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(bytes.data(), bytes.size());
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    fail(ErrorKind::FormatError, "truncated model container");
  }
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
  return v;
}

void put_f64(std::ostream& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[static_cast<std::size_t>(i)] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  out.write(bytes.data(), bytes.size());
}

double get_f64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    fail(ErrorKind::FormatError, "truncated model payload");
  }
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[static_cast<std::size_t>(i)];
  return std::bit_cast<double>(bits);
}

}  // namespace

Selection Selection::strongest(std::size_t k) {
  if (k == 0) fail(ErrorKind::SelectionError, "strongest:k needs k >= 1");
  return Selection{Kind::Strongest, k, {}};
}

Selection Selection::weakest(std::size_t k) {
  if (k == 0) fail(ErrorKind::SelectionError, "weakest:k needs k >= 1");
  return Selection{Kind::Weakest, k, {}};
}

Selection Selection::of_indices(std::vector<std::size_t> one_based) {
  if (one_based.empty()) fail(ErrorKind::SelectionError, "idx selection is empty");
  std::sort(one_based.begin(), one_based.end());
  if (one_based.front() == 0) fail(ErrorKind::SelectionError, "idx selection is 1-based");
  if (std::adjacent_find(one_based.begin(), one_based.end()) != one_based.end()) {
    fail(ErrorKind::SelectionError, "idx selection has duplicates");
  }
  return Selection{Kind::Indices, 0, std::move(one_based)};
}

Selection Selection::all() { return Selection{Kind::All, 0, {}}; }

Selection Selection::parse(std::string_view text) {
  text = trim(text);
  if (text == "all") return all();
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) fail(ErrorKind::SelectionError, "unknown selection '" + std::string(text) + "'");
  const auto kind = trim(text.substr(0, colon));
  const auto arg = text.substr(colon + 1);
  if (kind == "strongest") return strongest(parse_count(arg, "strongest:k"));
  if (kind == "weakest") return weakest(parse_count(arg, "weakest:k"));
  if (kind == "idx") {
    std::vector<std::size_t> indices;
    for (auto item : split(arg, ',')) parse_index_item(item, indices);
    return of_indices(std::move(indices));
  }
  fail(ErrorKind::SelectionError, "unknown selection kind '" + std::string(kind) + "'");
}

std::string Selection::to_string() const {
  switch (kind) {
    case Kind::Strongest: return "strongest:" + std::to_string(k);
    case Kind::Weakest: return "weakest:" + std::to_string(k);
    case Kind::All: return "all";
    case Kind::Indices: {
      std::string s = "idx:";
      for (std::size_t i = 0; i < indices.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(indices[i]);
      }
      return s;
    }
  }
  return {};
}

std::vector<std::size_t> Selection::positions(std::size_t basis_size) const {
  std::vector<std::size_t> out;
  switch (kind) {
    case Kind::All:
      if (basis_size == 0) fail(ErrorKind::SelectionError, "empty basis");
      for (std::size_t i = 0; i < basis_size; ++i) out.push_back(i);
      break;
    case Kind::Strongest:
    case Kind::Weakest: {
      if (k == 0 || k > basis_size) {
        fail(ErrorKind::SelectionError,
             to_string() + " does not fit a basis of " + std::to_string(basis_size) + " eigenvectors");
      }
      const std::size_t first = kind == Kind::Strongest ? 0 : basis_size - k;
      for (std::size_t i = 0; i < k; ++i) out.push_back(first + i);
      break;
    }
    case Kind::Indices:
      if (indices.empty()) fail(ErrorKind::SelectionError, "idx selection is empty");
      for (std::size_t idx : indices) {
        if (idx == 0 || idx > basis_size) {
          fail(ErrorKind::SelectionError,
               "index " + std::to_string(idx) + " outside [1, " + std::to_string(basis_size) + "]");
        }
        out.push_back(idx - 1);
      }
      break;
  }
  return out;
}

std::vector<Selection> parse_selection_list(std::string_view text) {
  std::vector<Selection> out;
  for (auto token : split(text, ',')) {
    token = trim(token);
    if (token.empty()) fail(ErrorKind::SelectionError, "empty entry in selection list");
    const bool bare_index = token.find_first_not_of("0123456789-") == std::string_view::npos;
    if (bare_index) {
      if (out.empty() || out.back().kind != Selection::Kind::Indices) {
        fail(ErrorKind::SelectionError, "bare number '" + std::string(token) + "' outside an idx: selection");
      }
      auto indices = out.back().indices;
      parse_index_item(token, indices);
      out.back() = Selection::of_indices(std::move(indices));
      continue;
    }
    out.push_back(Selection::parse(token));
  }
  if (out.empty()) fail(ErrorKind::SelectionError, "no selections given");
  return out;
}

BaseModel build_base_model(const EigenBasis& basis, const Selection& selection, BlockShape block_shape) {
  if (block_shape.pixels() != basis.dim()) {
    fail(ErrorKind::DimensionError, "block shape does not match the basis dimension");
  }
  const auto positions = selection.positions(basis.size());
  BaseModel bm;
  bm.mean = basis.mean;
  bm.basis.resize(basis.dim(), static_cast<Index>(positions.size()));
  bm.eigenvalues.resize(static_cast<Index>(positions.size()));
  for (std::size_t c = 0; c < positions.size(); ++c) {
    const auto& pair = basis.pairs[positions[c]];
    bm.basis.col(static_cast<Index>(c)) = pair.vector;
    bm.eigenvalues[static_cast<Index>(c)] = pair.value;
  }
  bm.selection = selection;
  bm.block_shape = block_shape;
  return bm;
}

Vector project(const BaseModel& bm, const Vector& image) {
  if (image.size() != bm.dim()) fail(ErrorKind::DimensionError, "project: image length differs from model");
  return bm.basis.transpose() * (image - bm.mean);
}

Vector reconstruct(const BaseModel& bm, const Vector& coefficients) {
  if (coefficients.size() != bm.size()) {
    fail(ErrorKind::DimensionError, "reconstruct: coefficient count differs from model");
  }
  return bm.basis * coefficients + bm.mean;
}

Vector estimate_background(const BaseModel& bm, const Vector& image) { return reconstruct(bm, project(bm, image)); }

void write_base_model(std::ostream& out, const BaseModel& bm) {
  nlohmann::json header;
  header["format"] = "wevbg-basemodel";
  header["block_shape"] = {bm.block_shape.height, bm.block_shape.width};
  header["D"] = bm.dim();
  header["M"] = bm.size();
  header["selection"] = bm.selection.to_string();
  const std::string text = header.dump();

  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (Index i = 0; i < bm.dim(); ++i) put_f64(out, bm.mean[i]);
  for (Index c = 0; c < bm.size(); ++c) {
    for (Index r = 0; r < bm.dim(); ++r) put_f64(out, bm.basis(r, c));
  }
  for (Index i = 0; i < bm.size(); ++i) put_f64(out, bm.eigenvalues[i]);
  if (!out) fail(ErrorKind::FormatError, "failed writing model container");
}

BaseModel read_base_model(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    fail(ErrorKind::FormatError, "not a wevbg base-model container");
  }
  if (get_u32(in) != kFormatVersion) fail(ErrorKind::FormatError, "unsupported base-model container version");
  const std::uint32_t header_len = get_u32(in);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), header_len)) fail(ErrorKind::FormatError, "truncated model header");

  BaseModel bm;
  Index dim = 0;
  Index m = 0;
  try {
    const auto header = nlohmann::json::parse(text);
    bm.block_shape = {header.at("block_shape").at(0).get<Index>(), header.at("block_shape").at(1).get<Index>()};
    dim = header.at("D").get<Index>();
    m = header.at("M").get<Index>();
    bm.selection = Selection::parse(header.at("selection").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::FormatError, std::string("bad model header: ") + e.what());
  }
  if (dim <= 0 || m <= 0 || bm.block_shape.pixels() != dim) fail(ErrorKind::FormatError, "inconsistent model header");

  bm.mean.resize(dim);
  for (Index i = 0; i < dim; ++i) bm.mean[i] = get_f64(in);
  bm.basis.resize(dim, m);
  for (Index c = 0; c < m; ++c) {
    for (Index r = 0; r < dim; ++r) bm.basis(r, c) = get_f64(in);
  }
  bm.eigenvalues.resize(m);
  for (Index i = 0; i < m; ++i) bm.eigenvalues[i] = get_f64(in);
  return bm;
}

void save_base_model(const std::filesystem::path& path, const BaseModel& bm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::NotFound, "cannot open " + path.string() + " for writing");
  write_base_model(out, bm);
}

BaseModel load_base_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::NotFound, "cannot open " + path.string());
  return read_base_model(in);
}

}  // namespace wevbg
