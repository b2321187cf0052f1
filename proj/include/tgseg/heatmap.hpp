#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tgseg/common.hpp"
#include "tgseg/spatial_attention.hpp"

namespace tgseg {

enum class Polarity { foreground, background };

// Patch features of the parallel stream with the class token removed.
struct ImageFeatures {
    Matrix patch_features; // N_i x C
    int grid_side = 0;     // g, with g * g == N_i

    int channels() const { return static_cast<int>(patch_features.cols()); }
    void validate() const;
};

struct TextFeature {
    Vector vec;
    std::string keyword;
    int chain_index = 1;
    Polarity polarity = Polarity::foreground;
};

struct SimilarityMap {
    std::vector<double> values; // one cosine per patch, row-major over the grid
    Polarity polarity = Polarity::foreground;
    int chain_index = 1;
};

struct Heatmap {
    RealGrid grid;    // image resolution, min-max normalized to [0, 1]
    RealGrid lattice; // (g * factor)^2 point-sampling lattice, min-max normalized
    double factor = 2.0;
    double raw_min = 0.0; // bounds of the full-resolution map before normalization
    double raw_max = 0.0;
    double lattice_raw_min = 0.0;
    double lattice_raw_max = 0.0;
};

// Cosine similarity of every patch row with the text vector.
SimilarityMap similarity_map(const ImageFeatures& image, const TextFeature& text);

// Entrywise mean over chains. All maps must share polarity and length.
std::vector<double> consensus(const std::vector<SimilarityMap>& maps, Polarity polarity);

std::vector<double> subtract_background(const std::vector<double>& fore, const std::vector<double>& back);

// Bilinear resize with half-pixel centers; source coordinates clamp at the borders.
RealGrid bilinear_resize(const RealGrid& src, int out_rows, int out_cols);

// Min-max normalization to [0, 1]. A constant grid maps to 0.5 everywhere.
// Returns the normalized grid with the raw (min, max).
std::pair<RealGrid, std::pair<double, double>> minmax_normalize(const RealGrid& g);

// round(g * factor); throws unless the product is a positive integer.
int lattice_side(int grid_side, double factor);

Heatmap spatialize_and_upsample(const std::vector<double>& si, int grid_side, double factor, int target_rows,
                                int target_cols);

// Full consensus path: per-chain similarity, fore/back means, difference, upsampling.
// An empty `back` list means no background subtraction.
Heatmap consensus_heatmap(const ImageFeatures& image, const std::vector<TextFeature>& fore,
                          const std::vector<TextFeature>& back, double factor, int target_rows, int target_cols);

} // namespace tgseg
