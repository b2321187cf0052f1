#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "tgseg/common.hpp"

namespace tgseg {

struct PromptSet {
    std::vector<Point> positives;
    std::vector<Point> negatives;
    std::optional<Box> box;
    std::optional<BinaryMask> mask; // dense prompt, only in PostMode::mask
};

// How the previous iteration's mask becomes an auxiliary prompt.
enum class PostMode { none, max_box, mask, max_iou_box };

std::string_view to_string(PostMode mode);
PostMode parse_post_mode(std::string_view name);

// Points from a normalized lattice.
// Positives: centers of cells >= threshold (argmax cell if none qualifies).
// Negatives: the same number of lowest cells, ties in row-major order.
// Cell (r, c) maps to ((c + 0.5) / cols * width, (r + 0.5) / rows * height).
PromptSet extract_points(const RealGrid& lattice, double threshold, int image_rows, int image_cols);

struct Component {
    Box box;
    int pixel_count = 0;
};

// 4-connected foreground components, in row-major order of their first pixel.
std::vector<Component> connected_components(const BinaryMask& mask);

// IoU between the solid box region and the mask.
double box_fill_iou(const Box& box, const BinaryMask& mask);

// Component box with the highest fill IoU against the whole mask; first wins ties.
std::optional<Box> max_iou_box(const BinaryMask& mask);

// Tight box around every foreground pixel.
std::optional<Box> max_box(const BinaryMask& mask);

// Attaches the auxiliary prompt derived from the previous mask, if any.
PromptSet assemble_prompts(PromptSet points, const std::optional<BinaryMask>& prev_mask,
                           PostMode mode = PostMode::max_iou_box);

} // namespace tgseg
