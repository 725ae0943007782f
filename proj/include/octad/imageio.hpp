#pragma once

#include <string>

#include "octad/common.hpp"

namespace octad::io {

// 8-bit grayscale raster (PNG/BMP/TIFF/JPEG), normalized to [0,1].
// target_resolution > 0 resizes to a square with bilinear interpolation.
Image load_grayscale(const std::string& path, int target_resolution = 0);

// round(v*255) quantization
void save_grayscale_png(const Image& image, const std::string& path);

// 0/255 binary mask
void save_mask_png(const std::vector<uint8_t>& mask, int h, int w, const std::string& path);
std::vector<uint8_t> load_mask_png(const std::string& path, int& h, int& w);

// 16-bit PNG: round(clamp(v,0,1)*65535)
void save_float_map_png16(const Image& map, const std::string& path);

// color heatmap rendering of a [0,1] map
void save_heatmap_png(const Image& map, const std::string& path);

}  // namespace octad::io
