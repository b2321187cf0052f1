#include "tgseg/heatmap.hpp"

#include <algorithm>
#include <cmath>

namespace tgseg {

namespace {
constexpr double kMinNorm = 1e-12;
}

void ImageFeatures::validate() const {
    require(grid_side >= 2, "ImageFeatures: grid side must be >= 2");
    require(patch_features.rows() == static_cast<Eigen::Index>(grid_side) * grid_side,
            "ImageFeatures: patch count does not match grid side");
    require(patch_features.cols() > 0, "ImageFeatures: no channels");
    for (Eigen::Index r = 0; r < patch_features.rows(); ++r) {
        if (patch_features.row(r).norm() < kMinNorm)
            throw DegenerateFeature("ImageFeatures: zero-norm patch " + std::to_string(r));
    }
}

SimilarityMap similarity_map(const ImageFeatures& image, const TextFeature& text) {
    image.validate();
    require(text.vec.size() == image.channels(), "similarity_map: channel widths differ");
    const double tn = text.vec.norm();
    if (!(tn >= kMinNorm)) throw DegenerateFeature("similarity_map: zero-norm text vector for '" + text.keyword + "'");
    const Vector t = text.vec / tn;

    SimilarityMap out;
    out.polarity = text.polarity;
    out.chain_index = text.chain_index;
    out.values.resize(image.patch_features.rows());
    for (Eigen::Index r = 0; r < image.patch_features.rows(); ++r) {
        const auto row = image.patch_features.row(r);
        const double c = (row / row.norm()).dot(t.transpose());
        out.values[r] = std::clamp(c, -1.0, 1.0);
    }
    return out;
}

std::vector<double> consensus(const std::vector<SimilarityMap>& maps, Polarity polarity) {
    require(!maps.empty(), "consensus: no maps");
    const std::size_t n = maps.front().values.size();
    std::vector<double> sum(n, 0.0);
    for (const auto& m : maps) {
        require(m.polarity == polarity, "consensus: mixed polarity");
        require(m.values.size() == n, "consensus: map lengths differ");
        for (std::size_t i = 0; i < n; ++i) sum[i] += m.values[i];
    }
    for (auto& v : sum) v /= static_cast<double>(maps.size());
    return sum;
}

std::vector<double> subtract_background(const std::vector<double>& fore, const std::vector<double>& back) {
    require(fore.size() == back.size(), "subtract_background: length mismatch");
    std::vector<double> out(fore.size());
    for (std::size_t i = 0; i < fore.size(); ++i) out[i] = fore[i] - back[i];
    return out;
}

RealGrid bilinear_resize(const RealGrid& src, int out_rows, int out_cols) {
    require(src.rows > 0 && src.cols > 0, "bilinear_resize: empty source");
    require(out_rows > 0 && out_cols > 0, "bilinear_resize: empty target");
    RealGrid dst(out_rows, out_cols);
    const double sy = static_cast<double>(src.rows) / out_rows;
    const double sx = static_cast<double>(src.cols) / out_cols;

    // Precompute the column taps; they are shared by all rows.
    std::vector<int> x0(out_cols), x1(out_cols);
    std::vector<double> wx(out_cols);
    for (int c = 0; c < out_cols; ++c) {
        double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.cols - 1));
        x0[c] = static_cast<int>(std::floor(fx));
        x1[c] = std::min(x0[c] + 1, src.cols - 1);
        wx[c] = fx - x0[c];
    }
    for (int r = 0; r < out_rows; ++r) {
        double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.rows - 1));
        const int y0 = static_cast<int>(std::floor(fy));
        const int y1 = std::min(y0 + 1, src.rows - 1);
        const double wy = fy - y0;
        for (int c = 0; c < out_cols; ++c) {
            const double top = src(y0, x0[c]) * (1.0 - wx[c]) + src(y0, x1[c]) * wx[c];
            const double bot = src(y1, x0[c]) * (1.0 - wx[c]) + src(y1, x1[c]) * wx[c];
            dst(r, c) = top * (1.0 - wy) + bot * wy;
        }
    }
    return dst;
}

std::pair<RealGrid, std::pair<double, double>> minmax_normalize(const RealGrid& g) {
    require(!g.empty(), "minmax_normalize: empty grid");
    const auto [lo_it, hi_it] = std::minmax_element(g.data.begin(), g.data.end());
    const double lo = *lo_it, hi = *hi_it;
    RealGrid out(g.rows, g.cols, 0.5);
    if (hi > lo) {
        const double span = hi - lo;
        for (std::size_t i = 0; i < g.size(); ++i) out.data[i] = (g.data[i] - lo) / span;
    }
    return {std::move(out), {lo, hi}};
}

int lattice_side(int grid_side, double factor) {
    require(factor > 0.0, "lattice_side: factor must be positive");
    const double raw = grid_side * factor;
    const int side = static_cast<int>(std::lround(raw));
    require(side >= 1 && std::abs(raw - side) < 1e-9,
            "lattice_side: grid side times factor must be a positive integer");
    return side;
}

Heatmap spatialize_and_upsample(const std::vector<double>& si, int grid_side, double factor, int target_rows,
                                int target_cols) {
    require(grid_side >= 1 && si.size() == static_cast<std::size_t>(grid_side) * grid_side,
            "spatialize_and_upsample: similarity length is not grid_side^2");
    RealGrid tokens(grid_side, grid_side);
    tokens.data = si;

    const int side = lattice_side(grid_side, factor);
    Heatmap h;
    h.factor = factor;
    auto [lat, lat_bounds] = minmax_normalize(bilinear_resize(tokens, side, side));
    h.lattice = std::move(lat);
    h.lattice_raw_min = lat_bounds.first;
    h.lattice_raw_max = lat_bounds.second;

    auto [full, bounds] = minmax_normalize(bilinear_resize(tokens, target_rows, target_cols));
    h.grid = std::move(full);
    h.raw_min = bounds.first;
    h.raw_max = bounds.second;
    return h;
}

Heatmap consensus_heatmap(const ImageFeatures& image, const std::vector<TextFeature>& fore,
                          const std::vector<TextFeature>& back, double factor, int target_rows, int target_cols) {
    require(!fore.empty(), "consensus_heatmap: no foreground keywords");
    std::vector<SimilarityMap> fmaps, bmaps;
    for (const auto& t : fore) fmaps.push_back(similarity_map(image, t));
    for (const auto& t : back) bmaps.push_back(similarity_map(image, t));

    std::vector<double> si = consensus(fmaps, Polarity::foreground);
    if (!bmaps.empty()) si = subtract_background(si, consensus(bmaps, Polarity::background));
    return spatialize_and_upsample(si, image.grid_side, factor, target_rows, target_cols);
}

} // namespace tgseg
