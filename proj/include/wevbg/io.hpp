#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "wevbg/image.hpp"
#include "wevbg/segmenter.hpp"

namespace wevbg {

/// Decodes a PGM (P2 or P5, maxval up to 65535) or an 8-bit PNG. Gray
/// values map to v / maxval; RGB PNGs are reduced with the BT.601 luma
/// weights (0.299, 0.587, 0.114) before scaling by 1/255.
Image read_image(const std::filesystem::path& path);

Image read_pgm(std::istream& in);

/// Writes an 8-bit binary PGM (P5, maxval 255); values are clamped to [0, 1]
/// and rounded to the nearest level.
void write_pgm(std::ostream& out, const Image& image);
void save_pgm(const std::filesystem::path& path, const Image& image);

/// Binary PGM with 0 for background and 255 for foreground.
void save_mask_pgm(const std::filesystem::path& path, const BinaryMask& mask);

/// Loads every file in `dir` whose name matches the glob `pattern`, sorted
/// lexicographically by file name; that order is the frame order. With the
/// default pattern "*", files that are not .pgm/.pnm/.png are ignored.
FrameSequence load_frames(const std::filesystem::path& dir, const std::string& pattern = "*");

/// Labels CSV with header `frame,label`; frame indices are 0-based and every
/// frame in [0, n_frames) must appear exactly once with label bg or fg.
std::vector<FrameLabel> load_labels(const std::filesystem::path& csv_path, std::size_t n_frames);
std::vector<FrameLabel> parse_labels(std::istream& in, std::size_t n_frames);
void write_labels(std::ostream& out, const std::vector<FrameLabel>& labels);

/// Full-precision sample table `frame,label,x0,...,x{D-1}`, one row per
/// frame (label bg/fg, or empty when unlabeled). Each row is a 1 x D frame.
void write_sequence_csv(std::ostream& out, const FrameSequence& seq);
FrameSequence read_sequence_csv(const std::filesystem::path& path);

/// A trained set of block models: `grid.json` plus one `block_NNNN.wbm`
/// container per grid origin.
void save_model_set(const std::filesystem::path& dir, const BlockGrid& grid, const std::vector<BaseModel>& models);
struct ModelSet {
  BlockGrid grid;
  std::vector<BaseModel> models;
};
ModelSet load_model_set(const std::filesystem::path& dir);

}  // namespace wevbg
