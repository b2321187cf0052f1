#pragma once

// Three-panel inspection image: input | colorized heatmap | input with the
// mask boundary drawn in red.

#include <array>

#include "tgseg/common.hpp"

namespace tgseg {

// Jet-style colormap for v in [0, 1].
std::array<double, 3> jet(double v);

// Mask pixels with a 4-neighbour outside the mask or on the image edge.
BinaryMask mask_boundary(const BinaryMask& mask);

// Output is H x 3W with the input's channel count forced to 3.
Image render_overlay(const Image& image, const BinaryMask& mask, const RealGrid& heat);

} // namespace tgseg
