#pragma once

// 8-bit grayscale image files: PGM (P2 ASCII, P5 binary) and PNG via libpng.
// Targets linking sieva::io get libpng.

#include <png.h>

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sieva/core.hpp"

namespace sieva::io {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GrayImage {
  Shape shape;
  std::vector<std::uint8_t> pixels;  // row-major
};

namespace detail {

inline std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& ch : ext) ch = char(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

// Reads the next header integer, skipping whitespace and '#' comments.
inline long pgm_header_value(std::istream& in) {
  while (true) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  long value = -1;
  if (!(in >> value)) throw ImageError("malformed PGM header");
  return value;
}

}  // namespace detail

inline GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open " + path.string());
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P2" && magic != "P5") throw ImageError(path.string() + ": not a P2/P5 PGM file");

  const long width = detail::pgm_header_value(in);
  const long height = detail::pgm_header_value(in);
  const long maxval = detail::pgm_header_value(in);
  if (width <= 0 || height <= 0) throw ImageError(path.string() + ": empty image");
  if (maxval <= 0 || maxval > 255) throw ImageError(path.string() + ": only 8-bit PGM is supported");

  GrayImage img{{std::size_t(height), std::size_t(width)}, {}};
  img.pixels.resize(img.shape.size());
  if (magic == "P5") {
    in.get();  // single whitespace after maxval
    in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (in.gcount() != std::streamsize(img.pixels.size()))
      throw ImageError(path.string() + ": truncated pixel data");
  } else {
    for (auto& px : img.pixels) {
      long v = -1;
      if (!(in >> v) || v < 0 || v > maxval) throw ImageError(path.string() + ": bad pixel value");
      px = std::uint8_t(v);
    }
  }
  if (maxval != 255) {
    for (auto& px : img.pixels) px = std::uint8_t((px * 255 + maxval / 2) / maxval);
  }
  return img;
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot write " + path.string());
  out << "P5\n" << img.shape.width << ' ' << img.shape.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
  if (!out) throw ImageError("failed writing " + path.string());
}

inline GrayImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw ImageError(path.string() + ": " + image.message);
  if (image.format & PNG_FORMAT_FLAG_COLOR) {
    png_image_free(&image);
    throw ImageError(path.string() + ": color PNG, expected 8-bit grayscale");
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw ImageError(path.string() + ": 16-bit PNG, expected 8-bit grayscale");
  }
  image.format = PNG_FORMAT_GRAY;
  GrayImage img{{image.height, image.width}, {}};
  img.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr))
    throw ImageError(path.string() + ": " + image.message);
  return img;
}

inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(img.shape.width);
  image.height = png_uint_32(img.shape.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.pixels.data(), 0, nullptr))
    throw ImageError(path.string() + ": " + image.message);
}

inline bool is_supported(const std::filesystem::path& path) {
  const auto ext = detail::lower_extension(path);
  return ext == ".png" || ext == ".pgm";
}

inline GrayImage read_gray(const std::filesystem::path& path) {
  const auto ext = detail::lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw ImageError(path.string() + ": unsupported extension (expected .png or .pgm)");
}

inline void write_gray(const std::filesystem::path& path, const GrayImage& img) {
  const auto ext = detail::lower_extension(path);
  if (ext == ".png") return write_png(path, img);
  if (ext == ".pgm") return write_pgm(path, img);
  throw ImageError(path.string() + ": unsupported extension (expected .png or .pgm)");
}

inline SaliencyMap read_saliency(const std::filesystem::path& path) {
  const auto img = read_gray(path);
  return saliency_from_8bit(img.shape, img.pixels);
}

inline BinaryMask read_mask(const std::filesystem::path& path) {
  const auto img = read_gray(path);
  return mask_from_8bit(img.shape, img.pixels);
}

}  // namespace sieva::io
