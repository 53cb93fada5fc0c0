#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "wevbg/linalg.hpp"

namespace wevbg {

/// Which eigenvectors of a basis (in descending-eigenvalue order) form a
/// base model.
///
/// Text form: `strongest:k`, `weakest:k`, `idx:1,3,30` (1-based, `a-b`
/// ranges allowed) or `all`.
struct Selection {
  enum class Kind { Strongest, Weakest, Indices, All };

  Kind kind = Kind::All;
  std::size_t k = 0;
  std::vector<std::size_t> indices;  // 1-based, sorted, unique

  static Selection strongest(std::size_t k);
  static Selection weakest(std::size_t k);
  static Selection of_indices(std::vector<std::size_t> one_based);
  static Selection all();

  /// Parses the text form; throws SelectionError on malformed input.
  static Selection parse(std::string_view text);
  std::string to_string() const;

  /// 0-based positions into a basis of `basis_size` pairs, ascending.
  /// Throws SelectionError when the selection does not fit.
  std::vector<std::size_t> positions(std::size_t basis_size) const;

  bool operator==(const Selection&) const = default;
};

/// Splits a comma-separated list of selections. Bare numbers after an `idx:`
/// entry extend it, so "strongest:1,idx:1,3,30,all" has three entries.
std::vector<Selection> parse_selection_list(std::string_view text);

struct BlockShape {
  Index height = 0;
  Index width = 0;

  Index pixels() const noexcept { return height * width; }
  bool operator==(const BlockShape&) const = default;
};

/// Mean plus the selected eigenvector columns used to project and
/// reconstruct one block.
struct BaseModel {
  Vector mean;
  Matrix basis;  // D x M, orthonormal columns
  Vector eigenvalues;
  Selection selection;
  BlockShape block_shape;

  Index dim() const noexcept { return mean.size(); }
  Index size() const noexcept { return basis.cols(); }
};

BaseModel build_base_model(const EigenBasis& basis, const Selection& selection, BlockShape block_shape);

/// BM^T (image - mu).
Vector project(const BaseModel& bm, const Vector& image);

/// BM * coefficients + mu.
Vector reconstruct(const BaseModel& bm, const Vector& coefficients);

/// reconstruct(project(image)): the background estimate for one block.
Vector estimate_background(const BaseModel& bm, const Vector& image);

// Binary container: see docs/model_format.md.
void write_base_model(std::ostream& out, const BaseModel& bm);
BaseModel read_base_model(std::istream& in);
void save_base_model(const std::filesystem::path& path, const BaseModel& bm);
BaseModel load_base_model(const std::filesystem::path& path);

}  // namespace wevbg
