#include "tgseg/visual_prompts.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <string>

namespace tgseg {

std::string_view to_string(PostMode mode) {
    switch (mode) {
    case PostMode::none: return "none";
    case PostMode::max_box: return "maxbox";
    case PostMode::mask: return "mask";
    case PostMode::max_iou_box: return "maxioubox";
    }
    return "?";
}

PostMode parse_post_mode(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "none") return PostMode::none;
    if (s == "maxbox") return PostMode::max_box;
    if (s == "mask") return PostMode::mask;
    if (s == "maxioubox") return PostMode::max_iou_box;
    throw ContractViolation("unknown post-processing mode: " + std::string(name));
}

PromptSet extract_points(const RealGrid& lattice, double threshold, int image_rows, int image_cols) {
    require(!lattice.empty(), "extract_points: empty lattice");
    require(threshold > 0.0 && threshold < 1.0, "extract_points: threshold must be in (0, 1)");
    require(image_rows > 0 && image_cols > 0, "extract_points: empty image");

    auto center = [&](std::size_t idx) {
        const int r = static_cast<int>(idx / lattice.cols);
        const int c = static_cast<int>(idx % lattice.cols);
        return Point{(c + 0.5) / lattice.cols * image_cols, (r + 0.5) / lattice.rows * image_rows};
    };

    PromptSet out;
    for (std::size_t i = 0; i < lattice.size(); ++i)
        if (lattice.data[i] >= threshold) out.positives.push_back(center(i));
    if (out.positives.empty()) {
        const auto it = std::max_element(lattice.data.begin(), lattice.data.end());
        out.positives.push_back(center(static_cast<std::size_t>(it - lattice.data.begin())));
    }

    std::vector<std::size_t> order(lattice.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return lattice.data[a] < lattice.data[b]; });
    const std::size_t n = std::min(out.positives.size(), order.size());
    for (std::size_t i = 0; i < n; ++i) out.negatives.push_back(center(order[i]));
    return out;
}

std::vector<Component> connected_components(const BinaryMask& mask) {
    std::vector<Component> comps;
    Grid<int> label(mask.rows, mask.cols, -1);
    std::vector<std::pair<int, int>> stack;
    for (int r = 0; r < mask.rows; ++r) {
        for (int c = 0; c < mask.cols; ++c) {
            if (!mask(r, c) || label(r, c) >= 0) continue;
            const int id = static_cast<int>(comps.size());
            Component comp{Box{c, r, c + 1, r + 1}, 0};
            stack.assign(1, {r, c});
            label(r, c) = id;
            while (!stack.empty()) {
                auto [y, x] = stack.back();
                stack.pop_back();
                ++comp.pixel_count;
                comp.box.x0 = std::min(comp.box.x0, x);
                comp.box.y0 = std::min(comp.box.y0, y);
                comp.box.x1 = std::max(comp.box.x1, x + 1);
                comp.box.y1 = std::max(comp.box.y1, y + 1);
                constexpr int dy[] = {-1, 1, 0, 0};
                constexpr int dx[] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int ny = y + dy[k], nx = x + dx[k];
                    if (ny < 0 || nx < 0 || ny >= mask.rows || nx >= mask.cols) continue;
                    if (!mask(ny, nx) || label(ny, nx) >= 0) continue;
                    label(ny, nx) = id;
                    stack.emplace_back(ny, nx);
                }
            }
            comps.push_back(comp);
        }
    }
    return comps;
}

double box_fill_iou(const Box& box, const BinaryMask& mask) {
    long inter = 0, total = 0;
    for (int r = 0; r < mask.rows; ++r)
        for (int c = 0; c < mask.cols; ++c) {
            if (!mask(r, c)) continue;
            ++total;
            if (r >= box.y0 && r < box.y1 && c >= box.x0 && c < box.x1) ++inter;
        }
    const long uni = static_cast<long>(box.area()) + total - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

std::optional<Box> max_iou_box(const BinaryMask& mask) {
    const auto comps = connected_components(mask);
    std::optional<Box> best;
    double best_iou = -1.0;
    for (const auto& comp : comps) {
        const double iou = box_fill_iou(comp.box, mask);
        if (iou > best_iou) {
            best_iou = iou;
            best = comp.box;
        }
    }
    return best;
}

std::optional<Box> max_box(const BinaryMask& mask) {
    std::optional<Box> box;
    for (int r = 0; r < mask.rows; ++r)
        for (int c = 0; c < mask.cols; ++c) {
            if (!mask(r, c)) continue;
            if (!box) {
                box = Box{c, r, c + 1, r + 1};
                continue;
            }
            box->x0 = std::min(box->x0, c);
            box->y0 = std::min(box->y0, r);
            box->x1 = std::max(box->x1, c + 1);
            box->y1 = std::max(box->y1, r + 1);
        }
    return box;
}

PromptSet assemble_prompts(PromptSet points, const std::optional<BinaryMask>& prev_mask, PostMode mode) {
    points.box.reset();
    points.mask.reset();
    if (!prev_mask) return points;
    switch (mode) {
    case PostMode::none: break;
    case PostMode::max_box: points.box = max_box(*prev_mask); break;
    case PostMode::max_iou_box: points.box = max_iou_box(*prev_mask); break;
    case PostMode::mask: points.mask = *prev_mask; break;
    }
    return points;
}

} // namespace tgseg
