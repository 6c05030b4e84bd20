#include "permuton/render.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>

#include "permuton/errors.hpp"

namespace permuton {

namespace {

struct Image {
  std::size_t w, h;
  std::vector<unsigned char> px;  // RGB rows, top first
  Image(std::size_t w_, std::size_t h_) : w(w_), h(h_), px(w_ * h_ * 3, 255) {}
  void set(std::size_t x, std::size_t y, Rgb c) {
    if (x >= w || y >= h) return;
    unsigned char* p = &px[(y * w + x) * 3];
    p[0] = c.r, p[1] = c.g, p[2] = c.b;
  }
};

// 3x5 glyphs, one row per string, '#' lit.
const std::map<char, std::array<const char*, 5>>& font() {
  static const std::map<char, std::array<const char*, 5>> f = {
      {'0', {"###", "#.#", "#.#", "#.#", "###"}}, {'1', {".#.", "##.", ".#.", ".#.", "###"}},
      {'2', {"###", "..#", "###", "#..", "###"}}, {'3', {"###", "..#", "###", "..#", "###"}},
      {'4', {"#.#", "#.#", "###", "..#", "..#"}}, {'5', {"###", "#..", "###", "..#", "###"}},
      {'6', {"###", "#..", "###", "#.#", "###"}}, {'7', {"###", "..#", "..#", "..#", "..#"}},
      {'8', {"###", "#.#", "###", "#.#", "###"}}, {'9', {"###", "#.#", "###", "..#", "###"}},
      {'.', {"...", "...", "...", "...", ".#."}}, {'-', {"...", "...", "###", "...", "..."}},
      {'+', {"...", ".#.", "###", ".#.", "..."}}, {'e', {"...", "###", "#.#", "#..", "###"}},
      {'n', {"...", "##.", "#.#", "#.#", "#.#"}}, {'a', {"...", "###", "#.#", "###", "#.#"}},
      {'i', {".#.", "...", ".#.", ".#.", ".#."}}, {'f', {".##", "#..", "###", "#..", "#.."}},
  };
  return f;
}

void text(Image& img, std::size_t x, std::size_t y, const std::string& s, int scale) {
  for (char ch : s) {
    const auto it = font().find(ch);
    if (it != font().end())
      for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 3; ++c)
          if (it->second[r][c] == '#')
            for (int dy = 0; dy < scale; ++dy)
              for (int dx = 0; dx < scale; ++dx) img.set(x + c * scale + dx, y + r * scale + dy, {0, 0, 0});
    x += 4 * scale;
  }
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void write_png(const Image& img, const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw Error(ErrorKind::InvalidInput, "cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error(ErrorKind::InvalidInput, "libpng failed writing " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.w), static_cast<png_uint_32>(img.h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < img.h; ++y)
    png_write_row(png, const_cast<png_bytep>(&img.px[y * img.w * 3]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

Rgb colormap(const std::string& scale, double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  auto lerp = [t](const std::vector<std::array<double, 3>>& stops) {
    const double s = t * static_cast<double>(stops.size() - 1);
    const std::size_t i = std::min(static_cast<std::size_t>(s), stops.size() - 2);
    const double f = s - static_cast<double>(i);
    Rgb c;
    c.r = static_cast<unsigned char>(std::lround(255 * (stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))));
    c.g = static_cast<unsigned char>(std::lround(255 * (stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))));
    c.b = static_cast<unsigned char>(std::lround(255 * (stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
    return c;
  };
  if (scale == "viridis")
    return lerp({{0.267, 0.005, 0.329},
                 {0.283, 0.141, 0.458},
                 {0.254, 0.265, 0.530},
                 {0.207, 0.372, 0.553},
                 {0.164, 0.471, 0.558},
                 {0.128, 0.567, 0.551},
                 {0.135, 0.659, 0.518},
                 {0.267, 0.749, 0.441},
                 {0.478, 0.821, 0.318},
                 {0.741, 0.873, 0.150},
                 {0.993, 0.906, 0.144}});
  if (scale == "gray") return lerp({{0, 0, 0}, {1, 1, 1}});
  if (scale == "hot") return lerp({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {1, 1, 1}});
  throw Error(ErrorKind::InvalidInput, "unknown colour scale " + scale);
}

void render_heatmap(const std::vector<std::vector<double>>& values, const std::string& png_path,
                    const std::string& scale) {
  const std::size_t nx = values.size();
  if (nx == 0 || values[0].empty()) throw Error(ErrorKind::InvalidInput, "empty grid");
  const std::size_t ny = values[0].size();
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& col : values)
    for (double v : col)
      if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!(lo <= hi)) lo = hi = 0.0;
  const double span = hi > lo ? hi - lo : 1.0;
  colormap(scale, 0.0);  // rejects unknown names before any work

  const std::size_t cell = std::max<std::size_t>(1, 480 / std::max(nx, ny));
  const std::size_t W = nx * cell, H = ny * cell, margin = 12, bar = 24;
  const int fs = 2;
  Image img(margin + W + margin + bar + margin + 12 * 4 * fs + margin, margin + H + margin);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const Rgb c = colormap(scale, (values[i][j] - lo) / span);
      for (std::size_t a = 0; a < cell; ++a)
        for (std::size_t b = 0; b < cell; ++b) img.set(margin + i * cell + a, margin + (ny - 1 - j) * cell + b, c);
    }
  const std::size_t bx = margin + W + margin;
  for (std::size_t y = 0; y < H; ++y) {
    const Rgb c = colormap(scale, 1.0 - static_cast<double>(y) / static_cast<double>(std::max<std::size_t>(H - 1, 1)));
    for (std::size_t x = 0; x < bar; ++x) img.set(bx + x, margin + y, c);
  }
  text(img, bx + bar + 6, margin, label(hi), fs);
  text(img, bx + bar + 6, margin + H - 5 * fs, label(lo), fs);
  write_png(img, png_path);
}

}  // namespace permuton
