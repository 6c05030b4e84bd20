#pragma once

#include <string>
#include <vector>

#include "permuton/density.hpp"

namespace permuton {

// Supported scales: "viridis" (default), "gray", "hot". Throws InvalidInput on
// an unknown name.
struct Rgb {
  unsigned char r, g, b;
};
Rgb colormap(const std::string& scale, double t);

// Heat map of values[i][j] (i along x, j along y, y up) with a colour bar and
// the min/max printed beside it. Linear scale between the extremes.
void render_heatmap(const std::vector<std::vector<double>>& values, const std::string& png_path,
                    const std::string& scale = "viridis");

}  // namespace permuton
