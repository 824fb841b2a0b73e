#pragma once

#include <filesystem>

#include "drumscribe/tensor.hpp"

namespace drumscribe {

/// Writes a [0,1]-valued matrix as a binary (P5) 8-bit PGM image. Matrix row
/// r lands on image row rows-1-r, so row index increases upward in the image
/// (band 127 of a spectrogram renders at the top). Values are scaled by 255
/// and rounded.
void write_pgm(const Tensor<float>& values, const std::filesystem::path& path);

}  // namespace drumscribe
