#pragma once

// Frame image files. The format follows the extension:
//   .png  8-bit gray or RGB PNG (alpha is dropped on read)
//   .rgb  raw 8-bit planar RGB (R plane, G plane, B plane), no header; the
//         frame size comes from the caller
// Writes go through a temporary file and a rename, so readers never observe
// a partially written frame.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <png.h>

#include "lipkit/error.hpp"
#include "lipkit/image.hpp"

namespace lipkit {

namespace fs = std::filesystem;

struct RawFrameShape {
  std::size_t width = 0;
  std::size_t height = 0;
};

enum class ImageFormat { png, raw_rgb };

inline std::optional<ImageFormat> format_from_path(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".png" || ext == ".PNG") return ImageFormat::png;
  if (ext == ".rgb" || ext == ".RGB") return ImageFormat::raw_rgb;
  return std::nullopt;
}

inline std::string extension_for(ImageFormat f) { return f == ImageFormat::png ? ".png" : ".rgb"; }

/// Writes `bytes` to `path` via `path.tmp` + rename.
inline void write_file_atomic(const fs::path& path, const void* bytes, std::size_t size) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + tmp.string());
    out.write(static_cast<const char*>(bytes), static_cast<std::streamsize>(size));
    if (!out) throw IoError("short write: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

inline void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

inline Image read_png(const fs::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw IoError("cannot read PNG " + path.string() + ": " + img.message);
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image out(img.height, img.width, color ? 3 : 1);
  png_color background{0, 0, 0};
  if (!png_image_finish_read(&img, &background, out.pixels().data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  return out;
}

inline std::vector<unsigned char> encode_png(const Image& image) {
  if (image.empty() || (image.channels() != 1 && image.channels() != 3))
    throw ShapeError("encode_png: need a non-empty 1- or 3-channel image");
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(img, size, 0, image.pixels().data(), 0, nullptr))
    throw IoError(std::string("PNG size query failed: ") + img.message);
  std::vector<unsigned char> buf(size);
  if (!png_image_write_to_memory(&img, buf.data(), &size, 0, image.pixels().data(), 0, nullptr))
    throw IoError(std::string("PNG encode failed: ") + img.message);
  buf.resize(size);
  return buf;
}

inline void write_png(const fs::path& path, const Image& image) {
  const auto bytes = encode_png(image);
  write_file_atomic(path, bytes.data(), bytes.size());
}

inline Image read_raw_rgb(const fs::path& path, RawFrameShape shape) {
  if (shape.width == 0 || shape.height == 0)
    throw ParameterError("raw frame " + path.string() + ": frame size not configured");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read raw frame: " + path.string());
  const std::size_t plane = shape.width * shape.height;
  std::vector<unsigned char> buf(plane * 3);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size() || in.peek() != EOF)
    throw IoError("raw frame " + path.string() + ": size does not match " +
                  std::to_string(shape.width) + "x" + std::to_string(shape.height) + "x3");
  Image out(shape.height, shape.width, 3);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < plane; ++k) out.pixels()[k * 3 + c] = buf[c * plane + k];
  return out;
}

/// Gray images are written as three identical planes.
inline void write_raw_rgb(const fs::path& path, const Image& image) {
  const std::size_t plane = image.width() * image.height();
  std::vector<unsigned char> buf(plane * 3);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < plane; ++k)
      buf[c * plane + k] = image.pixels()[k * image.channels() + (image.channels() == 3 ? c : 0)];
  write_file_atomic(path, buf.data(), buf.size());
}

inline Image read_image(const fs::path& path, RawFrameShape raw_shape = {}) {
  const auto fmt = format_from_path(path);
  if (!fmt) throw IoError("unsupported image extension: " + path.string());
  return *fmt == ImageFormat::png ? read_png(path) : read_raw_rgb(path, raw_shape);
}

inline void write_image(const fs::path& path, const Image& image) {
  const auto fmt = format_from_path(path);
  if (!fmt) throw IoError("unsupported image extension: " + path.string());
  if (*fmt == ImageFormat::png) write_png(path, image);
  else write_raw_rgb(path, image);
}

}  // namespace lipkit
