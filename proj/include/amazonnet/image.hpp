#pragma once

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "amazonnet/errors.hpp"

namespace amazonnet {

// Interleaved 8-bit raster (RGB or grayscale).
struct ImageU8 {
  int64_t width = 0;
  int64_t height = 0;
  int64_t channels = 1;
  std::vector<uint8_t> pixels;

  ImageU8() = default;
  ImageU8(int64_t w, int64_t h, int64_t c)
      : width(w), height(h), channels(c),
        pixels(static_cast<size_t>(w * h * c), 0) {}
};

// Single-band raster of 8- or 16-bit samples (stored widened to u16).
struct GrayImage {
  int64_t width = 0;
  int64_t height = 0;
  int bit_depth = 8;
  std::vector<uint16_t> pixels;

  GrayImage() = default;
  GrayImage(int64_t w, int64_t h, int depth)
      : width(w), height(h), bit_depth(depth), pixels(static_cast<size_t>(w * h), 0) {}

  int64_t max_value() const { return bit_depth == 16 ? 65535 : 255; }
};

// Binary mask with values in {0,1}.
struct MaskImage {
  int64_t width = 0;
  int64_t height = 0;
  std::vector<uint8_t> values;

  MaskImage() = default;
  MaskImage(int64_t w, int64_t h) : width(w), height(h), values(static_cast<size_t>(w * h), 0) {}

  int64_t count_positive() const {
    int64_t n = 0;
    for (uint8_t v : values) n += v != 0;
    return n;
  }
};

struct PngData {
  int64_t width = 0;
  int64_t height = 0;
  int channels = 1;
  int bit_depth = 8;
  std::vector<uint16_t> samples;  // interleaved, widened to u16
};

namespace detail {

struct FileCloser {
  std::FILE* f;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

}  // namespace detail

// Decodes 8-bit RGB or 8/16-bit grayscale PNGs; anything else (palette,
// alpha, other depths) is rejected with an error naming the file.
inline PngData read_png(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) throw IoError("cannot open png: " + path.string());
  detail::FileCloser closer{f};

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed for " + path.string());
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png decode failed for " + path.string());
  }
  png_init_io(png, f);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  PngData out;
  out.width = width;
  out.height = height;
  out.bit_depth = bit_depth;
  if (color_type == PNG_COLOR_TYPE_GRAY && (bit_depth == 8 || bit_depth == 16)) {
    out.channels = 1;
  } else if (color_type == PNG_COLOR_TYPE_RGB && bit_depth == 8) {
    out.channels = 3;
  } else {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported png format (need gray8/gray16/rgb8) in " + path.string());
  }
  png_read_update_info(png, info);

  const size_t row_bytes = png_get_rowbytes(png, info);
  std::vector<uint8_t> raw(row_bytes * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const size_t n = static_cast<size_t>(width) * height * out.channels;
  out.samples.resize(n);
  if (bit_depth == 16) {
    for (size_t i = 0; i < n; ++i)  // png is big-endian per sample
      out.samples[i] = static_cast<uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  } else {
    for (size_t i = 0; i < n; ++i) out.samples[i] = raw[i];
  }
  return out;
}

namespace detail {

inline void write_png_impl(const std::filesystem::path& path, int64_t width, int64_t height,
                           int channels, int bit_depth, const uint8_t* bytes) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot open png for writing: " + path.string());
  FileCloser closer{f};

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed for " + path.string());
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png encode failed for " + path.string());
  }
  png_init_io(png, f);
  const int color_type = channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const size_t row_bytes = static_cast<size_t>(width) * channels * (bit_depth / 8);
  std::vector<png_bytep> rows(static_cast<size_t>(height));
  for (int64_t y = 0; y < height; ++y)
    rows[static_cast<size_t>(y)] = const_cast<uint8_t*>(bytes) + y * row_bytes;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detail

inline void write_png(const std::filesystem::path& path, const ImageU8& img) {
  if (img.channels != 1 && img.channels != 3)
    throw IoError("write_png: only 1- or 3-channel 8-bit images supported");
  detail::write_png_impl(path, img.width, img.height, static_cast<int>(img.channels), 8,
                         img.pixels.data());
}

inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
  if (img.bit_depth == 8) {
    std::vector<uint8_t> bytes(img.pixels.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<uint8_t>(img.pixels[i]);
    detail::write_png_impl(path, img.width, img.height, 1, 8, bytes.data());
  } else {
    std::vector<uint8_t> bytes(img.pixels.size() * 2);  // big-endian samples
    for (size_t i = 0; i < img.pixels.size(); ++i) {
      bytes[2 * i] = static_cast<uint8_t>(img.pixels[i] >> 8);
      bytes[2 * i + 1] = static_cast<uint8_t>(img.pixels[i] & 0xff);
    }
    detail::write_png_impl(path, img.width, img.height, 1, 16, bytes.data());
  }
}

inline void write_png(const std::filesystem::path& path, const MaskImage& mask) {
  std::vector<uint8_t> bytes(mask.values.size());
  for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.values[i] ? 255 : 0;
  detail::write_png_impl(path, mask.width, mask.height, 1, 8, bytes.data());
}

}  // namespace amazonnet
