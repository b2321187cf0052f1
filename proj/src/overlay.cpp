#include "tgseg/overlay.hpp"

#include <algorithm>
#include <cmath>

namespace tgseg {

std::array<double, 3> jet(double v) {
    v = std::clamp(v, 0.0, 1.0);
    auto ramp = [v](double center) { return std::clamp(1.5 - std::abs(4.0 * v - center), 0.0, 1.0); };
    return {ramp(3.0), ramp(2.0), ramp(1.0)};
}

BinaryMask mask_boundary(const BinaryMask& mask) {
    BinaryMask out(mask.rows, mask.cols, 0);
    for (int r = 0; r < mask.rows; ++r)
        for (int c = 0; c < mask.cols; ++c) {
            if (!mask(r, c)) continue;
            const bool edge = r == 0 || c == 0 || r == mask.rows - 1 || c == mask.cols - 1 || !mask(r - 1, c) ||
                              !mask(r + 1, c) || !mask(r, c - 1) || !mask(r, c + 1);
            out(r, c) = edge ? 1 : 0;
        }
    return out;
}

Image render_overlay(const Image& image, const BinaryMask& mask, const RealGrid& heat) {
    require(image.height > 0 && image.width > 0 && image.channels >= 1, "render_overlay: empty image");
    require(mask.rows == image.height && mask.cols == image.width, "render_overlay: mask shape differs");
    require(heat.rows == image.height && heat.cols == image.width, "render_overlay: heatmap shape differs");
    const int w = image.width;
    Image out(image.height, 3 * w, 3);
    const BinaryMask ring = mask_boundary(mask);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < w; ++x) {
            std::array<double, 3> px{};
            for (int c = 0; c < 3; ++c) px[c] = image.at(y, x, std::min(c, image.channels - 1));
            const auto hc = jet(heat(y, x));
            for (int c = 0; c < 3; ++c) {
                out.at(y, x, c) = px[c];
                out.at(y, w + x, c) = hc[c];
                out.at(y, 2 * w + x, c) = px[c];
            }
            if (ring(y, x)) {
                out.at(y, 2 * w + x, 0) = 1.0;
                out.at(y, 2 * w + x, 1) = 0.0;
                out.at(y, 2 * w + x, 2) = 0.0;
            }
        }
    return out;
}

} // namespace tgseg
