#include "refiner/raster_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "refiner/encoding.hpp"
#include "refiner/errors.hpp"

namespace refiner {

namespace {

struct ReadCursor {
  std::span<const std::uint8_t> data;
  std::size_t offset = 0;
};

void read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->data.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, cursor->data.data() + cursor->offset, length);
  cursor->offset += length;
}

void write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_callback(png_structp) {}

[[noreturn]] void error_callback(png_structp, png_const_charp message) {
  throw ParseError(fmt::format("png: {}", message));
}

void warning_callback(png_structp, png_const_charp) {}

/// RAII pair for libpng read/write structs.
class PngRead {
 public:
  PngRead() {
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, error_callback, warning_callback);
    if (!png_) throw ParseError("png: cannot allocate read struct");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_read_struct(&png_, nullptr, nullptr);
      throw ParseError("png: cannot allocate info struct");
    }
  }
  ~PngRead() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngRead(const PngRead&) = delete;
  PngRead& operator=(const PngRead&) = delete;

  png_structp png() const { return png_; }
  png_infop info() const { return info_; }

 private:
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

class PngWrite {
 public:
  PngWrite() {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, error_callback, warning_callback);
    if (!png_) throw ParseError("png: cannot allocate write struct");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_write_struct(&png_, nullptr);
      throw ParseError("png: cannot allocate info struct");
    }
  }
  ~PngWrite() { png_destroy_write_struct(&png_, &info_); }
  PngWrite(const PngWrite&) = delete;
  PngWrite& operator=(const PngWrite&) = delete;

  png_structp png() const { return png_; }
  png_infop info() const { return info_; }

 private:
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

// error_callback throws through libpng frames instead of longjmp; requires libpng built with
// unwind tables (true for the Linux distro packages we target).

Bytes write_png(int width, int height, int color_type, int bit_depth, const std::vector<Bytes>& rows) {
  Bytes out;
  PngWrite w;
  png_set_write_fn(w.png(), &out, write_callback, flush_callback);
  png_set_IHDR(w.png(), w.info(), static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(w.png(), 6);
  png_write_info(w.png(), w.info());
  for (const auto& row : rows) png_write_row(w.png(), row.data());
  png_write_end(w.png(), nullptr);
  return out;
}

struct GrayImage {
  int width = 0;
  int height = 0;
  int bit_depth = 8;  // 8 or 16 after expansion
  std::vector<std::uint16_t> samples;
};

void check_signature(std::span<const std::uint8_t> png) {
  if (png.size() < 8 || png_sig_cmp(png.data(), 0, 8) != 0) throw ParseError("png: bad signature");
}

GrayImage decode_gray(std::span<const std::uint8_t> bytes) {
  check_signature(bytes);
  PngRead r;
  ReadCursor cursor{bytes, 0};
  png_set_read_fn(r.png(), &cursor, read_callback);
  png_read_info(r.png(), r.info());

  const int color_type = png_get_color_type(r.png(), r.info());
  const int depth = png_get_bit_depth(r.png(), r.info());
  if ((color_type & PNG_COLOR_MASK_COLOR) != 0) {
    throw ParseError("png: expected a single-channel image");
  }
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(r.png());
  if ((color_type & PNG_COLOR_MASK_ALPHA) != 0) png_set_strip_alpha(r.png());
  png_read_update_info(r.png(), r.info());

  GrayImage img;
  img.width = static_cast<int>(png_get_image_width(r.png(), r.info()));
  img.height = static_cast<int>(png_get_image_height(r.png(), r.info()));
  img.bit_depth = depth == 16 ? 16 : 8;
  const std::size_t rowbytes = png_get_rowbytes(r.png(), r.info());
  Bytes row(rowbytes);
  img.samples.reserve(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    png_read_row(r.png(), row.data(), nullptr);
    for (int x = 0; x < img.width; ++x) {
      if (img.bit_depth == 16) {
        img.samples.push_back(static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]));
      } else {
        img.samples.push_back(row[x]);
      }
    }
  }
  png_read_end(r.png(), nullptr);
  return img;
}

Bytes encode_gray(const SaliencyMap& map, int bit_depth) {
  const int maxval = bit_depth == 16 ? 65535 : 255;
  std::vector<Bytes> rows(static_cast<std::size_t>(map.height()));
  for (int y = 0; y < map.height(); ++y) {
    auto& row = rows[static_cast<std::size_t>(y)];
    row.reserve(static_cast<std::size_t>(map.width()) * (bit_depth / 8));
    for (int x = 0; x < map.width(); ++x) {
      const auto s = static_cast<unsigned>(std::lround(map.at(x, y) * maxval));
      if (bit_depth == 16) row.push_back(static_cast<std::uint8_t>(s >> 8));
      row.push_back(static_cast<std::uint8_t>(s & 0xFF));
    }
  }
  return write_png(map.width(), map.height(), PNG_COLOR_TYPE_GRAY, bit_depth, rows);
}

void append_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

}  // namespace

Bytes encode_png_rgb(const RgbImage& image) {
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    throw InvalidArgument("encode_png_rgb: raster size does not match dimensions");
  }
  const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
  std::vector<Bytes> rows;
  rows.reserve(static_cast<std::size_t>(image.height));
  for (int y = 0; y < image.height; ++y) {
    auto begin = image.pixels.begin() + static_cast<std::ptrdiff_t>(y * stride);
    rows.emplace_back(begin, begin + static_cast<std::ptrdiff_t>(stride));
  }
  return write_png(image.width, image.height, PNG_COLOR_TYPE_RGB, 8, rows);
}

RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes) {
  check_signature(bytes);
  PngRead r;
  ReadCursor cursor{bytes, 0};
  png_set_read_fn(r.png(), &cursor, read_callback);
  png_read_info(r.png(), r.info());

  const int color_type = png_get_color_type(r.png(), r.info());
  const int depth = png_get_bit_depth(r.png(), r.info());
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png());
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(r.png());
  if (png_get_valid(r.png(), r.info(), PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png());
  if (depth == 16) png_set_strip_16(r.png());
  if ((color_type & PNG_COLOR_MASK_COLOR) == 0) png_set_gray_to_rgb(r.png());
  png_set_strip_alpha(r.png());
  png_read_update_info(r.png(), r.info());

  RgbImage img;
  img.width = static_cast<int>(png_get_image_width(r.png(), r.info()));
  img.height = static_cast<int>(png_get_image_height(r.png(), r.info()));
  const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
  if (png_get_rowbytes(r.png(), r.info()) != stride) throw ParseError("png: unexpected row layout");
  img.pixels.resize(stride * static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    png_read_row(r.png(), img.pixels.data() + y * stride, nullptr);
  }
  png_read_end(r.png(), nullptr);
  return img;
}

Bytes encode_saliency_png16(const SaliencyMap& map) { return encode_gray(map, 16); }

Bytes encode_saliency_png8(const SaliencyMap& map) { return encode_gray(map, 8); }

SaliencyMap decode_saliency_png(std::span<const std::uint8_t> png) {
  GrayImage g = decode_gray(png);
  const double maxval = g.bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<double> values(g.samples.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = g.samples[i] / maxval;
  return SaliencyMap(g.width, g.height, std::move(values));
}

Bytes encode_mask_png(const BinaryMask& mask) {
  std::vector<Bytes> rows(static_cast<std::size_t>(mask.height()));
  for (int y = 0; y < mask.height(); ++y) {
    auto& row = rows[static_cast<std::size_t>(y)];
    row.assign(static_cast<std::size_t>((mask.width() + 7) / 8), 0);
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) row[static_cast<std::size_t>(x / 8)] |= static_cast<std::uint8_t>(0x80 >> (x % 8));
    }
  }
  return write_png(mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, 1, rows);
}

BinaryMask decode_mask_png(std::span<const std::uint8_t> png) {
  GrayImage g = decode_gray(png);
  std::vector<std::uint8_t> bits(g.samples.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = g.samples[i] != 0 ? 1 : 0;
  return BinaryMask(g.width, g.height, std::move(bits));
}

SaliencyMap quantize16(const SaliencyMap& map) {
  std::vector<double> values(map.values().begin(), map.values().end());
  for (double& v : values) v = static_cast<double>(std::lround(v * 65535.0)) / 65535.0;
  return SaliencyMap(map.width(), map.height(), std::move(values));
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path.string()));
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

RgbImage load_pixels(const ImageRef& image) {
  if (const auto* raster = std::get_if<std::shared_ptr<const RgbImage>>(&image.pixels)) {
    if (!*raster) throw InvalidArgument(fmt::format("image '{}' has no pixel data", image.id));
    return **raster;
  }
  const auto& path = std::get<std::filesystem::path>(image.pixels);
  RgbImage img = decode_png_rgb(read_file(path));
  if (img.width != image.width || img.height != image.height) {
    throw ValidationError(fmt::format("image '{}' is {}x{} on disk but declared {}x{}", image.id, img.width,
                                      img.height, image.width, image.height),
                          {image.id});
  }
  return img;
}

void write_saliency_sidecar(const std::filesystem::path& path, const SaliencyMap& map) {
  nlohmann::json j = {{"width", map.width()},
                      {"height", map.height()},
                      {"values", std::vector<double>(map.values().begin(), map.values().end())}};
  const std::string text = j.dump();
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

SaliencyMap read_saliency_sidecar(const std::filesystem::path& path) {
  const Bytes raw = read_file(path);
  try {
    const auto j = nlohmann::json::parse(raw.begin(), raw.end());
    return SaliencyMap(j.at("width").get<int>(), j.at("height").get<int>(),
                       j.at("values").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

SaliencyMap read_saliency_file(const std::filesystem::path& path) {
  if (path.extension() == ".json") return read_saliency_sidecar(path);
  return decode_saliency_png(read_file(path));
}

std::string content_hash(const RgbImage& image) {
  Bytes buf{'r', 'g', 'b', '8'};
  append_u32(buf, static_cast<std::uint32_t>(image.width));
  append_u32(buf, static_cast<std::uint32_t>(image.height));
  buf.insert(buf.end(), image.pixels.begin(), image.pixels.end());
  return sha256_hex(buf);
}

std::string content_hash(const SaliencyMap& map) {
  Bytes buf{'s', 'a', 'l', '6'};
  append_u32(buf, static_cast<std::uint32_t>(map.width()));
  append_u32(buf, static_cast<std::uint32_t>(map.height()));
  for (double v : map.values()) {
    const auto s = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    buf.push_back(static_cast<std::uint8_t>(s >> 8));
    buf.push_back(static_cast<std::uint8_t>(s & 0xFF));
  }
  return sha256_hex(buf);
}

std::string content_hash(const BinaryMask& mask) {
  Bytes buf{'m', 'a', 's', 'k'};
  append_u32(buf, static_cast<std::uint32_t>(mask.width()));
  append_u32(buf, static_cast<std::uint32_t>(mask.height()));
  buf.insert(buf.end(), mask.bits().begin(), mask.bits().end());
  return sha256_hex(buf);
}

}  // namespace refiner
