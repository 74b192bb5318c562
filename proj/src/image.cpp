// SPDX-License-Identifier: Apache-2.0
#include "trajkit/image.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "trajkit/errors.hpp"
#include "trajkit/hash.hpp"

namespace trajkit {

Image::Image(int w, int h, Rgb fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw ImageDecodeError("negative image size");
  pixels.resize(static_cast<size_t>(w) * static_cast<size_t>(h) * 3);
  for (size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill.r;
    pixels[i + 1] = fill.g;
    pixels[i + 2] = fill.b;
  }
}

Rgb Image::at(int x, int y) const {
  const auto i = (static_cast<size_t>(y) * width + x) * 3;
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void Image::set(int x, int y, Rgb c) {
  const auto i = (static_cast<size_t>(y) * width + x) * 3;
  pixels[i] = c.r;
  pixels[i + 1] = c.g;
  pixels[i + 2] = c.b;
}

Image decode_png(std::string_view bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw ImageDecodeError(std::string("png: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  png_color black{0, 0, 0};
  if (!png_image_finish_read(&img, &black, out.pixels.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw ImageDecodeError("png: " + msg);
  }
  return out;
}

std::string encode_png(const Image& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw ImageDecodeError(std::string("png encode: ") + img.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw ImageDecodeError(std::string("png encode: ") + img.message);
  }
  out.resize(size);
  return out;
}

Image load_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageDecodeError("cannot open image '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

void save_png(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image '" + path.string() + "'");
  const auto bytes = encode_png(image);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

void fill_disc(Image& image, int cx, int cy, int radius, Rgb color) {
  const long r2 = static_cast<long>(radius) * radius;
  for (int y = cy - radius; y <= cy + radius; ++y) {
    for (int x = cx - radius; x <= cx + radius; ++x) {
      const long dx = x - cx;
      const long dy = y - cy;
      if (dx * dx + dy * dy <= r2 && image.contains(x, y)) image.set(x, y, color);
    }
  }
}

void draw_line(Image& image, int x0, int y0, int x1, int y1, int thickness, Rgb color) {
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  const int steps = static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))) + 1;
  const int half = std::max(0, thickness / 2);
  for (int i = 0; i < steps; ++i) {
    const double t = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    const int x = static_cast<int>(std::lround(x0 + t * dx));
    const int y = static_cast<int>(std::lround(y0 + t * dy));
    fill_disc(image, x, y, half, color);
  }
}

void draw_arrow(Image& image, int x0, int y0, int x1, int y1, int thickness, Rgb color) {
  draw_line(image, x0, y0, x1, y1, thickness, color);
  const double len = std::hypot(x1 - x0, y1 - y0);
  if (len < 1.0) return;
  const double ux = (x1 - x0) / len;
  const double uy = (y1 - y0) / len;
  const double head = std::min(16.0, len / 2);
  // Two barbs at +/-30 degrees from the reversed direction.
  constexpr double c = 0.8660254037844386;
  constexpr double s = 0.5;
  for (double sign : {1.0, -1.0}) {
    const double bx = -ux * c - sign * -uy * s;
    const double by = -uy * c - sign * ux * s;
    draw_line(image, x1, y1, static_cast<int>(std::lround(x1 + head * bx)),
              static_cast<int>(std::lround(y1 + head * by)), thickness, color);
  }
}

std::string ImagePayload::data_uri() const { return "data:" + mime + ";base64," + base64_encode(bytes); }

ImagePayload make_payload(const Image& image, std::string ref) {
  return ImagePayload{"image/png", encode_png(image), image.width, image.height, std::move(ref)};
}

}  // namespace trajkit
