#include "wevbg/io.hpp"

#include <fnmatch.h>
#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

#include "wevbg/errors.hpp"
#include "wevbg/theory.hpp"

namespace wevbg {

namespace {

namespace fs = std::filesystem;

// Reads the next unsigned decimal header token, skipping whitespace and
// '#' comments.
unsigned read_header_number(std::istream& in) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n' && ch != '\r') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  if (ch == EOF || !std::isdigit(ch)) fail(ErrorKind::FormatError, "malformed PGM header");
  unsigned long value = 0;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + static_cast<unsigned>(ch - '0');
    if (value > 1u << 24) fail(ErrorKind::FormatError, "PGM header value out of range");
    ch = in.get();
  }
  if (ch != EOF) in.unget();
  return static_cast<unsigned>(value);
}

Image read_png(const fs::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    fail(ErrorKind::FormatError, path.string() + ": " + png.message);
  }
  if (png.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&png);
    fail(ErrorKind::FormatError, path.string() + ": only 8-bit PNG is supported");
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    fail(ErrorKind::FormatError, path.string() + ": " + msg);
  }

  Image img(static_cast<Index>(png.height), static_cast<Index>(png.width));
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (color) {
      const png_byte* px = &buffer[3 * i];
      img.pixels[i] = (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
    } else {
      img.pixels[i] = buffer[i] / 255.0;
    }
  }
  return img;
}

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".pnm" || ext == ".png";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Image read_pgm(std::istream& in) {
  std::array<char, 2> magic{};
  if (!in.read(magic.data(), 2) || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5')) {
    fail(ErrorKind::FormatError, "not a P2/P5 PGM stream");
  }
  const bool binary = magic[1] == '5';
  const unsigned width = read_header_number(in);
  const unsigned height = read_header_number(in);
  const unsigned maxval = read_header_number(in);
  if (width == 0 || height == 0) fail(ErrorKind::FormatError, "PGM has zero size");
  if (maxval == 0 || maxval > 65535) fail(ErrorKind::FormatError, "PGM maxval out of range");

  Image img(static_cast<Index>(height), static_cast<Index>(width));
  const double max = static_cast<double>(maxval);
  if (binary) {
    in.get();  // single whitespace byte after maxval
    const std::size_t bytes_per = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(img.pixels.size() * bytes_per);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
      fail(ErrorKind::FormatError, "truncated PGM raster");
    }
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      const unsigned v = bytes_per == 1 ? raw[i] : (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1];
      if (v > maxval) fail(ErrorKind::FormatError, "PGM sample exceeds maxval");
      img.pixels[i] = v / max;
    }
  } else {
    for (double& p : img.pixels) {
      const unsigned v = read_header_number(in);
      if (v > maxval) fail(ErrorKind::FormatError, "PGM sample exceeds maxval");
      p = v / max;
    }
  }
  return img;
}

Image read_image(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::NotFound, "cannot open " + path.string());
  std::array<unsigned char, 8> sig{};
  in.read(reinterpret_cast<char*>(sig.data()), sig.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got >= 2 && sig[0] == 'P' && (sig[1] == '2' || sig[1] == '5')) {
    in.clear();
    in.seekg(0);
    try {
      return read_pgm(in);
    } catch (const Error& e) {
      fail(e.kind(), path.string() + ": " + e.what());
    }
  }
  if (got == 8 && png_sig_cmp(sig.data(), 0, 8) == 0) return read_png(path);
  fail(ErrorKind::FormatError, path.string() + ": unsupported image format");
}

void write_pgm(std::ostream& out, const Image& image) {
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<char> raw(image.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = std::clamp(image.pixels[i], 0.0, 1.0);
    raw[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
}

void save_pgm(const fs::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::NotFound, "cannot open " + path.string() + " for writing");
  write_pgm(out, image);
}

void save_mask_pgm(const fs::path& path, const BinaryMask& mask) {
  Image img(mask.height, mask.width);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) img.pixels[i] = mask.bits[i] ? 1.0 : 0.0;
  save_pgm(path, img);
}

FrameSequence load_frames(const fs::path& dir, const std::string& pattern) {
  if (!fs::is_directory(dir)) fail(ErrorKind::NotFound, "frame directory " + dir.string() + " does not exist");
  const bool default_pattern = pattern == "*";
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (fnmatch(pattern.c_str(), name.c_str(), 0) != 0) continue;
    if (default_pattern && !has_image_extension(entry.path())) continue;
    files.push_back(entry.path());
  }
  if (files.empty()) fail(ErrorKind::NotFound, "no frames matching '" + pattern + "' in " + dir.string());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  FrameSequence seq;
  for (const auto& f : files) {
    seq.frames.push_back(read_image(f));
    seq.sources.push_back(f.string());
    if (!seq.frames.back().same_shape(seq.frames.front())) {
      fail(ErrorKind::DimensionError, f.string() + " differs in size from " + files.front().string());
    }
  }
  return seq;
}

std::vector<FrameLabel> parse_labels(std::istream& in, std::size_t n_frames) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "frame,label") {
    fail(ErrorKind::LabelError, "labels CSV must start with the header 'frame,label'");
  }
  std::vector<std::optional<FrameLabel>> labels(n_frames);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) fail(ErrorKind::LabelError, "line " + std::to_string(line_no) + ": expected frame,label");
    const auto index_text = trim(text.substr(0, comma));
    const auto label_text = trim(text.substr(comma + 1));
    std::size_t index = 0;
    const auto [ptr, ec] = std::from_chars(index_text.data(), index_text.data() + index_text.size(), index);
    if (index_text.empty() || ec != std::errc{} || ptr != index_text.data() + index_text.size()) {
      fail(ErrorKind::LabelError, "line " + std::to_string(line_no) + ": bad frame index");
    }
    if (index >= n_frames) fail(ErrorKind::LabelError, "frame index " + std::to_string(index) + " out of range");
    if (labels[index]) fail(ErrorKind::LabelError, "duplicate label for frame " + std::to_string(index));
    if (label_text == "bg") {
      labels[index] = FrameLabel::Background;
    } else if (label_text == "fg") {
      labels[index] = FrameLabel::Foreground;
    } else {
      fail(ErrorKind::LabelError, "unknown label '" + std::string(label_text) + "'");
    }
  }
  std::vector<FrameLabel> out;
  out.reserve(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    if (!labels[i]) fail(ErrorKind::LabelError, "missing label for frame " + std::to_string(i));
    out.push_back(*labels[i]);
  }
  return out;
}

std::vector<FrameLabel> load_labels(const fs::path& csv_path, std::size_t n_frames) {
  std::ifstream in(csv_path);
  if (!in) fail(ErrorKind::NotFound, "cannot open labels file " + csv_path.string());
  return parse_labels(in, n_frames);
}

void write_labels(std::ostream& out, const std::vector<FrameLabel>& labels) {
  out << "frame,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << label_name(labels[i]) << '\n';
}

void write_sequence_csv(std::ostream& out, const FrameSequence& seq) {
  seq.validate();
  out << "frame,label";
  for (Index j = 0; j < seq.height() * seq.width(); ++j) out << ",x" << j;
  out << '\n';
  for (std::size_t i = 0; i < seq.size(); ++i) {
    out << i << ',' << (seq.labels ? label_name((*seq.labels)[i]) : "");
    for (double v : seq.frames[i].pixels) out << ',' << fmt::format("{}", v);
    out << '\n';
  }
}

FrameSequence read_sequence_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::NotFound, "cannot open sequence file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("frame,label,", 0) != 0) {
    fail(ErrorKind::FormatError, path.string() + ": expected header frame,label,x0,...");
  }
  const auto dim = static_cast<Index>(std::count(line.begin(), line.end(), ',') - 1);

  FrameSequence seq;
  std::vector<FrameLabel> labels;
  bool any_label = false, any_unlabeled = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::vector<std::string_view> cells;
    std::string_view rest = line;
    for (auto comma = rest.find(','); comma != std::string_view::npos; comma = rest.find(',')) {
      cells.push_back(trim(rest.substr(0, comma)));
      rest.remove_prefix(comma + 1);
    }
    cells.push_back(trim(rest));
    if (static_cast<Index>(cells.size()) != dim + 2) fail(ErrorKind::DimensionError, where + ": wrong column count");
    if (cells[0] != std::to_string(seq.size())) fail(ErrorKind::FormatError, where + ": frames must be numbered 0, 1, ...");
    if (cells[1] == "bg" || cells[1] == "fg") {
      labels.push_back(cells[1] == "bg" ? FrameLabel::Background : FrameLabel::Foreground);
      any_label = true;
    } else if (cells[1].empty()) {
      any_unlabeled = true;
    } else {
      fail(ErrorKind::LabelError, where + ": unknown label '" + std::string(cells[1]) + "'");
    }
    Image frame(1, dim);
    for (Index j = 0; j < dim; ++j) {
      const auto cell = cells[static_cast<std::size_t>(j) + 2];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
        fail(ErrorKind::FormatError, where + ": bad number '" + std::string(cell) + "'");
      }
      frame.pixels[static_cast<std::size_t>(j)] = v;
    }
    seq.frames.push_back(std::move(frame));
    seq.sources.push_back(path.string());
  }
  if (seq.frames.empty()) fail(ErrorKind::NotFound, path.string() + ": no samples");
  if (any_label && any_unlabeled) fail(ErrorKind::LabelError, path.string() + ": labels must cover every frame");
  if (any_label) seq.labels = std::move(labels);
  return seq;
}

void save_model_set(const fs::path& dir, const BlockGrid& grid, const std::vector<BaseModel>& models) {
  if (models.size() != grid.size()) fail(ErrorKind::DimensionError, "one model per grid block is required");
  fs::create_directories(dir);
  nlohmann::json doc;
  doc["format"] = "wevbg-modelset";
  doc["frame_shape"] = {grid.frame_height, grid.frame_width};
  doc["block_shape"] = {grid.block.height, grid.block.width};
  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t b = 0; b < grid.size(); ++b) {
    const std::string file = fmt::format("block_{:04d}.wbm", b);
    blocks.push_back({{"origin", {grid.origins[b].row, grid.origins[b].col}}, {"file", file}});
    save_base_model(dir / file, models[b]);
  }
  doc["blocks"] = std::move(blocks);
  std::ofstream out(dir / "grid.json");
  if (!out) fail(ErrorKind::NotFound, "cannot write " + (dir / "grid.json").string());
  out << doc.dump(2) << '\n';
}

ModelSet load_model_set(const fs::path& dir) {
  const fs::path index = dir / "grid.json";
  std::ifstream in(index);
  if (!in) fail(ErrorKind::NotFound, "no model set at " + dir.string() + " (missing grid.json)");
  ModelSet set;
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.at("format") != "wevbg-modelset") fail(ErrorKind::FormatError, index.string() + ": not a model set");
    set.grid.frame_height = doc.at("frame_shape").at(0).get<Index>();
    set.grid.frame_width = doc.at("frame_shape").at(1).get<Index>();
    set.grid.block = {doc.at("block_shape").at(0).get<Index>(), doc.at("block_shape").at(1).get<Index>()};
    for (const auto& block : doc.at("blocks")) {
      set.grid.origins.push_back({block.at("origin").at(0).get<Index>(), block.at("origin").at(1).get<Index>()});
      set.models.push_back(load_base_model(dir / block.at("file").get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::FormatError, index.string() + ": " + e.what());
  }
  const auto expected = tile_blocks(set.grid.frame_height, set.grid.frame_width, set.grid.block);
  if (expected.origins != set.grid.origins) fail(ErrorKind::FormatError, index.string() + ": block origins do not tile the frame");
  for (const auto& m : set.models) {
    if (m.block_shape != set.grid.block) fail(ErrorKind::FormatError, index.string() + ": model block shape mismatch");
  }
  return set;
}

}  // namespace wevbg
