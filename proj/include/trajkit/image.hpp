// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace trajkit {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// 8-bit RGB raster, row-major, no padding.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  Image() = default;
  Image(int w, int h, Rgb fill = {});

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool operator==(const Image&) const = default;
};

/// Throws ImageDecodeError on malformed input. Alpha is composited onto
/// black; palette and grey images are expanded to RGB.
Image decode_png(std::string_view bytes);
std::string encode_png(const Image& image);

Image load_png(const std::filesystem::path& path);
void save_png(const Image& image, const std::filesystem::path& path);

// Raster primitives; pixels outside the image are clipped.
void fill_disc(Image& image, int cx, int cy, int radius, Rgb color);
void draw_line(Image& image, int x0, int y0, int x1, int y1, int thickness, Rgb color);
void draw_arrow(Image& image, int x0, int y0, int x1, int y1, int thickness, Rgb color);

/// Encoded image attached to a model request. `ref` names where it came from
/// (file path, content hash or simulator URI) and is never sent on the wire.
struct ImagePayload {
  std::string mime = "image/png";
  std::string bytes;
  int width = 0;
  int height = 0;
  std::string ref;

  std::string data_uri() const;
};

ImagePayload make_payload(const Image& image, std::string ref);

}  // namespace trajkit
