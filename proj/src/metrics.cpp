#include "tgseg/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace tgseg {

namespace {

constexpr double kEps = 2.220446049250313e-16;

void check_pair(const RealGrid& pred, const BinaryMask& gt) {
    require(!gt.empty(), "metrics: empty ground truth");
    require(pred.rows == gt.rows && pred.cols == gt.cols, "metrics: prediction and ground truth shapes differ");
}

std::size_t count_fg(const BinaryMask& m) {
    std::size_t n = 0;
    for (auto v : m.data) n += v ? 1 : 0;
    return n;
}

// Enhanced-alignment sum for a binarization with the given confusion counts.
double enhanced_sum(double tp, double fp, double fn, double tn, double n_pix, double gt_fg) {
    if (gt_fg == 0.0) return tn + fn;
    if (gt_fg == n_pix) return tp + fp;
    const double pred_fg = tp + fp;
    const double mp = pred_fg / n_pix, mg = gt_fg / n_pix;
    auto term = [](double a, double b) {
        const double align = 2.0 * a * b / (a * a + b * b + kEps);
        return (align + 1.0) * (align + 1.0) / 4.0;
    };
    // pred fg / gt fg, pred fg / gt bg, pred bg / gt fg, pred bg / gt bg
    return tp * term(1.0 - mp, 1.0 - mg) + fp * term(1.0 - mp, -mg) + fn * term(-mp, 1.0 - mg) +
           tn * term(-mp, -mg);
}

double s_object(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double sigma = 0.0;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double v : xs) ss += (v - mean) * (v - mean);
        sigma = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return 2.0 * mean / (mean * mean + 1.0 + sigma + kEps);
}

double object_score(const RealGrid& pred, const BinaryMask& gt) {
    std::vector<double> fg, bg;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt.data[i]) fg.push_back(pred.data[i]);
        else bg.push_back(1.0 - pred.data[i]);
    }
    const double u = static_cast<double>(fg.size()) / static_cast<double>(gt.size());
    return u * s_object(fg) + (1.0 - u) * s_object(bg);
}

double ssim_block(const RealGrid& pred, const BinaryMask& gt, int r0, int r1, int c0, int c1) {
    const double n = static_cast<double>(r1 - r0) * (c1 - c0);
    double x = 0.0, y = 0.0;
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
            x += pred(r, c);
            y += gt(r, c);
        }
    x /= n;
    y /= n;
    double sx = 0.0, sy = 0.0, sxy = 0.0;
    if (n > 1.0) {
        for (int r = r0; r < r1; ++r)
            for (int c = c0; c < c1; ++c) {
                const double dp = pred(r, c) - x, dg = gt(r, c) - y;
                sx += dp * dp;
                sy += dg * dg;
                sxy += dp * dg;
            }
        sx /= n - 1.0;
        sy /= n - 1.0;
        sxy /= n - 1.0;
    }
    const double a = 4.0 * x * y * sxy;
    const double b = (x * x + y * y) * (sx + sy);
    if (a != 0.0) return a / (b + kEps);
    return b == 0.0 ? 1.0 : 0.0;
}

// Pixel boundaries nearest to the continuous centroid along one axis.
// `sum` is the sum of foreground pixel indices, `count` their number.
// An exact tie between two boundaries yields both.
std::vector<int> split_candidates(long long sum, long long count, int extent) {
    if (count == 0) {
        if (extent % 2 == 0) return {extent / 2};
        return {extent / 2, extent / 2 + 1};
    }
    // centroid = (2 * sum + count) / (2 * count) in pixel-edge coordinates
    const long long num = 2 * sum + count, den = 2 * count;
    const long long lo = num / den;
    const long long rem2 = 2 * (num - lo * den);
    if (rem2 < den) return {static_cast<int>(lo)};
    if (rem2 > den) return {static_cast<int>(lo + 1)};
    return {static_cast<int>(lo), static_cast<int>(lo + 1)};
}

double region_score(const RealGrid& pred, const BinaryMask& gt) {
    long long sx = 0, sy = 0, cnt = 0;
    for (int r = 0; r < gt.rows; ++r)
        for (int c = 0; c < gt.cols; ++c)
            if (gt(r, c)) {
                sx += c;
                sy += r;
                ++cnt;
            }
    const auto xs = split_candidates(sx, cnt, gt.cols);
    const auto ys = split_candidates(sy, cnt, gt.rows);
    const double area = static_cast<double>(gt.rows) * gt.cols;

    double total = 0.0;
    for (int X : xs)
        for (int Y : ys) {
            const std::array<std::array<int, 4>, 4> quads = {{
                {0, Y, 0, X},
                {0, Y, X, gt.cols},
                {Y, gt.rows, 0, X},
                {Y, gt.rows, X, gt.cols},
            }};
            double score = 0.0;
            for (const auto& q : quads) {
                const double n = static_cast<double>(q[1] - q[0]) * (q[3] - q[2]);
                if (n <= 0.0) continue;
                score += n / area * ssim_block(pred, gt, q[0], q[1], q[2], q[3]);
            }
            total += score;
        }
    return total / static_cast<double>(xs.size() * ys.size());
}

} // namespace

RealGrid to_real(const BinaryMask& mask) {
    RealGrid g(mask.rows, mask.cols);
    for (std::size_t i = 0; i < mask.size(); ++i) g.data[i] = mask.data[i] ? 1.0 : 0.0;
    return g;
}

double mae(const RealGrid& pred, const BinaryMask& gt) {
    check_pair(pred, gt);
    double s = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) s += std::abs(pred.data[i] - (gt.data[i] ? 1.0 : 0.0));
    return s / static_cast<double>(gt.size());
}

double adaptive_f(const RealGrid& pred, const BinaryMask& gt, double beta_sq) {
    check_pair(pred, gt);
    double mean = 0.0;
    for (double v : pred.data) mean += v;
    mean /= static_cast<double>(pred.size());
    const double tau = std::min(2.0 * mean, 1.0);
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const bool p = pred.data[i] >= tau && pred.data[i] > 0.0;
        const bool g = gt.data[i] != 0;
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
    }
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double den = beta_sq * precision + recall;
    return den > 0.0 ? (1.0 + beta_sq) * precision * recall / den : 0.0;
}

double e_measure_binary(const BinaryMask& pred, const BinaryMask& gt) {
    require(pred.same_shape(gt) && !gt.empty(), "e_measure: shapes differ");
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const bool p = pred.data[i] != 0, g = gt.data[i] != 0;
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
        tn += !p && !g;
    }
    const double n = static_cast<double>(gt.size());
    return enhanced_sum(tp, fp, fn, tn, n, tp + fn) / n;
}

double e_measure(const RealGrid& pred, const BinaryMask& gt) {
    check_pair(pred, gt);
    constexpr int kLevels = 256;
    // passes[i] = number of thresholds (k + 0.5) / 256 that pixel i reaches.
    std::array<double, kLevels + 1> hist_fg{}, hist_bg{};
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const double p = pred.data[i];
        const int passes = std::clamp(static_cast<int>(std::floor(kLevels * p - 0.5)) + 1, 0, kLevels);
        (gt.data[i] ? hist_fg : hist_bg)[passes] += 1.0;
    }
    // Pixels foreground at threshold k are those with passes > k.
    const double n = static_cast<double>(gt.size());
    double gt_fg = 0.0;
    for (double v : hist_fg) gt_fg += v;
    double tp = gt_fg, fp = n - gt_fg; // passes > -1
    double total = 0.0;
    for (int k = 0; k < kLevels; ++k) {
        tp -= hist_fg[k];
        fp -= hist_bg[k];
        const double fn = gt_fg - tp;
        const double tn = (n - gt_fg) - fp;
        total += enhanced_sum(tp, fp, fn, tn, n, gt_fg) / n;
    }
    return total / kLevels;
}

double s_measure(const RealGrid& pred, const BinaryMask& gt, double alpha) {
    check_pair(pred, gt);
    const std::size_t fg = count_fg(gt);
    double mean = 0.0;
    for (double v : pred.data) mean += v;
    mean /= static_cast<double>(pred.size());
    if (fg == 0) return 1.0 - mean;
    if (fg == gt.size()) return mean;
    const double s = alpha * object_score(pred, gt) + (1.0 - alpha) * region_score(pred, gt);
    return std::max(0.0, s);
}

MetricsRecord evaluate(const RealGrid& pred, const BinaryMask& gt) {
    return {mae(pred, gt), adaptive_f(pred, gt), e_measure(pred, gt), s_measure(pred, gt)};
}

MetricsRecord aggregate(const std::vector<MetricsRecord>& records) {
    require(!records.empty(), "aggregate: no records");
    MetricsRecord m;
    for (const auto& r : records) {
        m.mae += r.mae;
        m.f_beta += r.f_beta;
        m.e_phi += r.e_phi;
        m.s_alpha += r.s_alpha;
    }
    const double n = static_cast<double>(records.size());
    m.mae /= n;
    m.f_beta /= n;
    m.e_phi /= n;
    m.s_alpha /= n;
    return m;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    require(a.same_shape(b), "iou: shapes differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        inter += (a.data[i] && b.data[i]) ? 1 : 0;
        uni += (a.data[i] || b.data[i]) ? 1 : 0;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace tgseg
