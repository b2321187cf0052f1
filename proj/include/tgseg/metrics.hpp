#pragma once

// Camouflaged-object segmentation metrics.
//
// Predictions are real-valued maps in [0, 1]; ground truth is binary.
// Frozen parameters: beta^2 = 0.3, adaptive threshold min(2 * mean, 1),
// alpha = 0.5 for the structure measure, 256 thresholds for the E-measure.

#include <vector>

#include "tgseg/common.hpp"

namespace tgseg {

struct MetricsRecord {
    double mae = 0.0;
    double f_beta = 0.0;
    double e_phi = 0.0;
    double s_alpha = 0.0;
};

RealGrid to_real(const BinaryMask& mask);

double mae(const RealGrid& pred, const BinaryMask& gt);

// Adaptive F-measure. Foreground = pred >= tau and pred > 0, so an all-zero
// prediction selects nothing. Zero precision + recall gives 0.
double adaptive_f(const RealGrid& pred, const BinaryMask& gt, double beta_sq = 0.3);

// Mean enhanced-alignment measure over thresholds (k + 0.5) / 256, k = 0..255,
// foreground = pred >= threshold. Binary predictions binarize identically at
// every threshold. All-background GT scores the fraction of predicted
// background; all-foreground GT the fraction of predicted foreground.
double e_measure(const RealGrid& pred, const BinaryMask& gt);

// Enhanced-alignment score of one binary prediction.
double e_measure_binary(const BinaryMask& pred, const BinaryMask& gt);

// Structure measure S = alpha * S_object + (1 - alpha) * S_region.
// All-background GT: 1 - mean(pred). All-foreground GT: mean(pred).
double s_measure(const RealGrid& pred, const BinaryMask& gt, double alpha = 0.5);

MetricsRecord evaluate(const RealGrid& pred, const BinaryMask& gt);

MetricsRecord aggregate(const std::vector<MetricsRecord>& records);

double iou(const BinaryMask& a, const BinaryMask& b);

} // namespace tgseg
