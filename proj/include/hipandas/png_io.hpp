#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hipandas {

/// Writes an 8-bit RGB PNG (zlib-compressed, no filtering).
void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<uint8_t>& rgb);

} // namespace hipandas
