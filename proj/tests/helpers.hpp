#pragma once

#include <random>
#include <vector>

#include "oracles.hpp"
#include "tgseg/common.hpp"
#include "tgseg/spatial_attention.hpp"

namespace testing {

inline tgseg::Matrix random_matrix(std::mt19937_64& rng, int r, int c, double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    tgseg::Matrix m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = n(rng);
    return m;
}

inline oracle::Mat to_oracle(const tgseg::Matrix& m) {
    oracle::Mat out = oracle::zeros(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
    return out;
}

inline double max_abs_diff(const tgseg::Matrix& a, const oracle::Mat& b) {
    double d = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) d = std::max(d, std::abs(a(i, j) - b[i][j]));
    return d;
}

inline tgseg::BinaryMask random_mask(std::mt19937_64& rng, int rows, int cols, double p) {
    std::bernoulli_distribution b(p);
    tgseg::BinaryMask m(rows, cols);
    for (auto& v : m.data) v = b(rng) ? 1 : 0;
    return m;
}

// Random rectangles and ellipses, so components have some structure.
inline tgseg::BinaryMask random_blobs(std::mt19937_64& rng, int rows, int cols) {
    std::uniform_int_distribution<int> count(1, 4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    tgseg::BinaryMask m(rows, cols);
    const int n = count(rng);
    for (int k = 0; k < n; ++k) {
        const double cx = u(rng) * cols, cy = u(rng) * rows;
        const double rx = 0.5 + u(rng) * cols / 4.0, ry = 0.5 + u(rng) * rows / 4.0;
        const bool rect = u(rng) < 0.5;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                const double dx = (c + 0.5 - cx) / rx, dy = (r + 0.5 - cy) / ry;
                const bool in = rect ? (std::abs(dx) <= 1 && std::abs(dy) <= 1) : dx * dx + dy * dy <= 1;
                if (in) m(r, c) = 1;
            }
    }
    return m;
}

inline tgseg::RealGrid random_grid(std::mt19937_64& rng, int rows, int cols) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    tgseg::RealGrid g(rows, cols);
    for (auto& v : g.data) v = u(rng);
    return g;
}

} // namespace testing

#include "tgseg/backends.hpp"

namespace testing {

// Four blocks with the parallel stream starting at block 2, spelled out
// one layer at a time. Returns (original, alternate) after block 4.
inline std::pair<oracle::Mat, oracle::Mat> straight_line_4x2(const tgseg::MockEncoderWeights& w, const oracle::Mat& s1,
                                                             oracle::Logits alt_kind) {
    auto blk = [&](int m) { return w.blocks[m - 1]; };
    auto att = [&](const oracle::Mat& x, int m, oracle::Logits kind) {
        const auto& p = blk(m);
        return oracle::attention(x, to_oracle(p.w_k), to_oracle(p.w_q), to_oracle(p.w_v), p.num_heads, p.scale, kind);
    };
    auto f = [&](const oracle::Mat& x, int m) {
        const auto& b = w.ffn_b[m - 1];
        return oracle::ffn(x, to_oracle(w.ffn_w[m - 1]), std::vector<double>(b.data(), b.data() + b.size()));
    };
    using oracle::add;
    using oracle::Logits;
    // m = 1 < delta: original stream only.
    const oracle::Mat s2 = f(add(att(s1, 1, Logits::qk), s1), 1);
    // m = 2 = delta: the parallel stream starts from the original one.
    const oracle::Mat s3 = f(add(att(s2, 2, Logits::qk), s2), 2);
    const oracle::Mat a3 = f(add(att(s2, 2, alt_kind), s2), 2);
    // m = 3, 4 > delta: attention on the original stream, residual on the parallel one.
    const oracle::Mat s4 = f(add(att(s3, 3, Logits::qk), s3), 3);
    const oracle::Mat a4 = f(add(att(s3, 3, alt_kind), a3), 3);
    const oracle::Mat s5 = f(add(att(s4, 4, Logits::qk), s4), 4);
    const oracle::Mat a5 = f(add(att(s4, 4, alt_kind), a4), 4);
    return {s5, a5};
}

} // namespace testing
