#pragma once

// Reference implementations written with plain loops and std containers,
// independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<double>(c, 0.0)); }

inline Mat matmul(const Mat& a, const Mat& b) {
    Mat out = zeros(a.size(), b[0].size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    return out;
}

inline Mat add(const Mat& a, const Mat& b) {
    Mat out = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) out[i][j] += b[i][j];
    return out;
}

enum class Logits { kk, qk, vv };

// Per head: softmax over rows of (a_n . b_n^T) * scale, times v_n; heads concatenated.
// Also reports every softmax row sum through `row_sums`.
inline Mat attention(const Mat& x, const Mat& wk, const Mat& wq, const Mat& wv, int heads, double scale, Logits kind,
                     std::vector<double>* row_sums = nullptr) {
    const Mat k = matmul(x, wk), q = matmul(x, wq), v = matmul(x, wv);
    const std::size_t L = x.size();
    const std::size_t dk = wk[0].size() / heads, dv = wv[0].size() / heads;
    Mat out = zeros(L, wv[0].size());
    for (int h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < L; ++i) {
            std::vector<double> logit(L, 0.0);
            for (std::size_t j = 0; j < L; ++j) {
                double s = 0.0;
                if (kind == Logits::vv) {
                    for (std::size_t c = 0; c < dv; ++c) s += v[i][h * dv + c] * v[j][h * dv + c];
                } else {
                    const Mat& a = kind == Logits::kk ? k : q;
                    for (std::size_t c = 0; c < dk; ++c) s += a[i][h * dk + c] * k[j][h * dk + c];
                }
                logit[j] = s * scale;
            }
            double top = logit[0];
            for (double l : logit) top = std::max(top, l);
            double z = 0.0;
            for (double& l : logit) {
                l = std::exp(l - top);
                z += l;
            }
            double total = 0.0;
            for (std::size_t j = 0; j < L; ++j) {
                const double p = logit[j] / z;
                total += p;
                for (std::size_t c = 0; c < dv; ++c) out[i][h * dv + c] += p * v[j][h * dv + c];
            }
            if (row_sums) row_sums->push_back(total);
        }
    }
    return out;
}

// Token-wise tanh(x A + b).
inline Mat ffn(const Mat& x, const Mat& a, const std::vector<double>& b) {
    Mat out = matmul(x, a);
    for (auto& row : out)
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = std::tanh(row[j] + b[j]);
    return out;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

struct Cell {
    int row, col;
};

// Points by sorting: positives = cells >= t in row-major order (argmax if none),
// negatives = first |positives| cells of a stable ascending sort.
inline std::pair<std::vector<Cell>, std::vector<Cell>> sort_points(const std::vector<double>& v, int rows, int cols,
                                                                   double t) {
    std::vector<Cell> pos;
    for (int i = 0; i < rows * cols; ++i)
        if (v[i] >= t) pos.push_back({i / cols, i % cols});
    if (pos.empty()) {
        int best = 0;
        for (int i = 1; i < rows * cols; ++i)
            if (v[i] > v[best]) best = i;
        pos.push_back({best / cols, best % cols});
    }
    std::vector<int> idx(rows * cols);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::vector<Cell> neg;
    for (std::size_t i = 0; i < pos.size(); ++i) neg.push_back({idx[i] / cols, idx[i] % cols});
    return {pos, neg};
}

struct OBox {
    int x0, y0, x1, y1;
};

// Labels by repeated relaxation until no label changes (4-neighbourhood),
// then the box whose filled area has the best IoU with the mask. Earlier
// components (ordered by their first pixel in row-major order) win ties.
inline std::vector<OBox> component_boxes(const std::vector<std::uint8_t>& m, int rows, int cols) {
    std::vector<int> label(rows * cols, -1);
    for (int i = 0; i < rows * cols; ++i)
        if (m[i]) label[i] = i;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                const int i = r * cols + c;
                if (label[i] < 0) continue;
                const int nb[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
                for (const auto& n : nb) {
                    if (n[0] < 0 || n[0] >= rows || n[1] < 0 || n[1] >= cols) continue;
                    const int j = n[0] * cols + n[1];
                    if (label[j] >= 0 && label[j] < label[i]) {
                        label[i] = label[j];
                        changed = true;
                    }
                }
            }
    }
    std::vector<int> roots;
    for (int i = 0; i < rows * cols; ++i)
        if (label[i] == i) roots.push_back(i);
    std::vector<OBox> boxes;
    for (int root : roots) {
        OBox b{cols, rows, -1, -1};
        for (int i = 0; i < rows * cols; ++i)
            if (label[i] == root) {
                b.x0 = std::min(b.x0, i % cols);
                b.y0 = std::min(b.y0, i / cols);
                b.x1 = std::max(b.x1, i % cols + 1);
                b.y1 = std::max(b.y1, i / cols + 1);
            }
        boxes.push_back(b);
    }
    return boxes;
}

inline double fill_iou(const OBox& b, const std::vector<std::uint8_t>& m, int rows, int cols) {
    int inter = 0, uni = 0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const bool in = r >= b.y0 && r < b.y1 && c >= b.x0 && c < b.x1;
            const bool on = m[r * cols + c] != 0;
            inter += in && on;
            uni += in || on;
        }
    return uni ? static_cast<double>(inter) / uni : 0.0;
}

inline bool best_box(const std::vector<std::uint8_t>& m, int rows, int cols, OBox& out) {
    const auto boxes = component_boxes(m, rows, cols);
    if (boxes.empty()) return false;
    double best = -1.0;
    for (const auto& b : boxes) {
        const double v = fill_iou(b, m, rows, cols);
        if (v > best) {
            best = v;
            out = b;
        }
    }
    return true;
}

// Smallest index of the L1-closest mask to the mean.
inline int l1_argmin(const std::vector<std::vector<std::uint8_t>>& masks) {
    const std::size_t n = masks[0].size();
    std::vector<double> mean(n, 0.0);
    for (const auto& m : masks)
        for (std::size_t p = 0; p < n; ++p) mean[p] += m[p];
    for (auto& v : mean) v /= static_cast<double>(masks.size());
    int best = 0;
    double best_d = 1e300;
    for (std::size_t i = 0; i < masks.size(); ++i) {
        double d = 0.0;
        for (std::size_t p = 0; p < n; ++p) d += std::fabs(masks[i][p] - mean[p]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best + 1;
}

// ---- metrics ----

inline double mae(const std::vector<double>& p, const std::vector<std::uint8_t>& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - g[i]);
    return s / p.size();
}

inline double adaptive_f(const std::vector<double>& p, const std::vector<std::uint8_t>& g) {
    const double mean = std::accumulate(p.begin(), p.end(), 0.0) / p.size();
    const double t = std::min(1.0, mean * 2.0);
    double hit = 0, predicted = 0, actual = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool on = p[i] > 0.0 && p[i] >= t;
        predicted += on;
        actual += g[i] != 0;
        hit += on && g[i];
    }
    const double prec = predicted ? hit / predicted : 0.0, rec = actual ? hit / actual : 0.0;
    if (0.3 * prec + rec == 0.0) return 0.0;
    return 1.3 * prec * rec / (0.3 * prec + rec);
}

// Per-pixel enhanced-alignment matrix for a binary foreground map.
inline double enhanced_binary(const std::vector<std::uint8_t>& fg, const std::vector<std::uint8_t>& g) {
    const double n = static_cast<double>(g.size());
    const double gsum = std::accumulate(g.begin(), g.end(), 0.0);
    if (gsum == 0.0) {
        double bg = 0;
        for (auto v : fg) bg += v == 0;
        return bg / n;
    }
    if (gsum == n) {
        double on = 0;
        for (auto v : fg) on += v != 0;
        return on / n;
    }
    const double pm = std::accumulate(fg.begin(), fg.end(), 0.0) / n, gm = gsum / n;
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double a = fg[i] - pm, b = g[i] - gm;
        const double align = 2.0 * a * b / (a * a + b * b + 2.220446049250313e-16);
        total += (align + 1.0) * (align + 1.0) / 4.0;
    }
    return total / n;
}

inline double e_measure(const std::vector<double>& p, const std::vector<std::uint8_t>& g) {
    double total = 0.0;
    for (int k = 0; k < 256; ++k) {
        const double t = (k + 0.5) / 256.0;
        std::vector<std::uint8_t> fg(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) fg[i] = p[i] >= t;
        total += enhanced_binary(fg, g);
    }
    return total / 256.0;
}

// Structure measure: 0.5 object + 0.5 region, SSIM-style region blocks split
// at the pixel boundary nearest the GT centroid (both boundaries averaged on
// an exact tie).
inline double s_measure(const std::vector<double>& p, const std::vector<std::uint8_t>& g, int rows, int cols) {
    const double eps = 2.220446049250313e-16;
    const double n = static_cast<double>(g.size());
    const double gsum = std::accumulate(g.begin(), g.end(), 0.0);
    const double pmean = std::accumulate(p.begin(), p.end(), 0.0) / n;
    if (gsum == 0.0) return 1.0 - pmean;
    if (gsum == n) return pmean;

    auto obj = [&](bool fore) {
        std::vector<double> xs;
        for (std::size_t i = 0; i < g.size(); ++i)
            if ((g[i] != 0) == fore) xs.push_back(fore ? p[i] : 1.0 - p[i]);
        const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
        double var = 0.0;
        for (double x : xs) var += (x - m) * (x - m);
        const double sd = xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0;
        return 2.0 * m / (m * m + 1.0 + sd + eps);
    };
    const double u = gsum / n;
    const double so = u * obj(true) + (1.0 - u) * obj(false);

    auto ssim = [&](int r0, int r1, int c0, int c1) {
        std::vector<double> xs, ys;
        for (int r = r0; r < r1; ++r)
            for (int c = c0; c < c1; ++c) {
                xs.push_back(p[r * cols + c]);
                ys.push_back(g[r * cols + c]);
            }
        const double k = xs.size();
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
        double vx = 0, vy = 0, cxy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            vx += (xs[i] - mx) * (xs[i] - mx);
            vy += (ys[i] - my) * (ys[i] - my);
            cxy += (xs[i] - mx) * (ys[i] - my);
        }
        if (k > 1) {
            vx /= k - 1;
            vy /= k - 1;
            cxy /= k - 1;
        }
        const double a = 4 * mx * my * cxy, b = (mx * mx + my * my) * (vx + vy);
        if (a != 0.0) return a / (b + eps);
        return b == 0.0 ? 1.0 : 0.0;
    };
    auto splits = [](double centroid, int extent) {
        // Boundary nearest to the centroid in pixel-edge coordinates.
        const double lo = std::floor(centroid);
        std::vector<int> out;
        if (centroid - lo < 0.5) out = {static_cast<int>(lo)};
        else if (centroid - lo > 0.5) out = {static_cast<int>(lo) + 1};
        else out = {static_cast<int>(lo), static_cast<int>(lo) + 1};
        for (auto& v : out) v = std::clamp(v, 0, extent);
        return out;
    };
    double cx = 0, cy = 0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (g[r * cols + c]) {
                cx += c + 0.5;
                cy += r + 0.5;
            }
    cx /= gsum;
    cy /= gsum;
    const auto xs = splits(cx, cols), ys = splits(cy, rows);
    double sr = 0.0;
    for (int X : xs)
        for (int Y : ys) {
            const int quads[4][4] = {{0, Y, 0, X}, {0, Y, X, cols}, {Y, rows, 0, X}, {Y, rows, X, cols}};
            for (const auto& q : quads) {
                const double area = static_cast<double>(q[1] - q[0]) * (q[3] - q[2]);
                if (area > 0) sr += area / n * ssim(q[0], q[1], q[2], q[3]) / (xs.size() * ys.size());
            }
        }
    return std::max(0.0, 0.5 * so + 0.5 * sr);
}

} // namespace oracle
