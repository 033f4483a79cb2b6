#pragma once

// 8-bit grayscale images and binary PGM (P5) I/O.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "gto/error.hpp"

namespace gto {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
    if (w < 0 || h < 0) fail(Errc::invalid_parameter, "negative image size");
  }

  std::uint8_t& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
  std::uint8_t at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  bool empty() const { return pixels.empty(); }

  bool operator==(const Image&) const = default;
};

namespace detail {

inline int pgm_field(const std::vector<std::uint8_t>& data, std::size_t& pos) {
  while (pos < data.size()) {
    if (data[pos] == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (std::isspace(data[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= data.size() || !std::isdigit(data[pos])) fail(Errc::io, "malformed PGM header");
  long v = 0;
  while (pos < data.size() && std::isdigit(data[pos])) {
    v = v * 10 + (data[pos++] - '0');
    if (v > 1'000'000) fail(Errc::io, "PGM header value out of range");
  }
  return static_cast<int>(v);
}

}  // namespace detail

inline Image parse_pgm(const std::vector<std::uint8_t>& data) {
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5') fail(Errc::io, "not a binary PGM (P5) file");
  std::size_t pos = 2;
  const int w = detail::pgm_field(data, pos);
  const int h = detail::pgm_field(data, pos);
  const int maxval = detail::pgm_field(data, pos);
  if (w < 1 || h < 1) fail(Errc::io, "PGM has zero size");
  if (maxval < 1 || maxval > 255) fail(Errc::io, "only 8-bit PGM is supported (maxval " + std::to_string(maxval) + ")");
  if (pos >= data.size() || !std::isspace(data[pos])) fail(Errc::io, "malformed PGM header");
  ++pos;
  Image img(w, h);
  if (data.size() - pos < img.pixels.size()) fail(Errc::io, "PGM pixel data is truncated");
  std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(pos), img.pixels.size(), img.pixels.begin());
  return img;
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(Errc::io, "cannot read " + path);
  return data;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) fail(Errc::io, "cannot write " + path);
}

inline Image read_pgm(const std::string& path) { return parse_pgm(read_file(path)); }

inline std::vector<std::uint8_t> format_pgm(const Image& img) {
  const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

inline void write_pgm(const std::string& path, const Image& img) { write_file(path, format_pgm(img)); }

// Pads to multiples of `multiple` by replicating the last row and column.
inline Image pad_to_multiple(const Image& img, int multiple) {
  const int w = (img.width + multiple - 1) / multiple * multiple;
  const int h = (img.height + multiple - 1) / multiple * multiple;
  Image out(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = img.at(std::min(r, img.height - 1), std::min(c, img.width - 1));
  return out;
}

inline Image crop(const Image& img, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > img.width || y0 + h > img.height)
    fail(Errc::dimension, "crop window outside the image");
  Image out(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = img.at(y0 + r, x0 + c);
  return out;
}

}  // namespace gto
