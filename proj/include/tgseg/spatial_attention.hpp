#pragma once

// Self-attention kernels for the dual-path encoder.
//
// Three logit variants share one contract: per head n,
//   out_n = row_softmax(a_n * b_n^T * scale) * v_n
// where (a, b) is (k, k) for kkv, (q, k) for kqv and (v, v) for vvv.
// Heads are concatenated along the channel axis.
//
// dual_path_step() advances an encoder by one block, keeping the original
// k-q-v stream and, from block `delta` on, a parallel stream whose attention
// is computed from the original stream but whose residual is its own.

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tgseg/common.hpp"

namespace tgseg {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Tokens of one encoder layer: row 0 is the class token, rows 1.. are patches.
struct TokenFeatures {
    Matrix tokens;
    int layer_index = 0;

    int length() const { return static_cast<int>(tokens.rows()); }
    int width() const { return static_cast<int>(tokens.cols()); }

    // Side of the square patch grid. Throws unless L >= 2 and L - 1 is a perfect square.
    int grid_side() const;
};

struct HeadProjections {
    Matrix w_k; // d x d_k
    Matrix w_q; // d x d_q
    Matrix w_v; // d x d_v
    int num_heads = 1;
    double scale = 1.0;

    // Builds projections with the per-head transformer scale 1/sqrt(d_k / h).
    static HeadProjections with_default_scale(Matrix w_k, Matrix w_q, Matrix w_v, int num_heads);

    int in_width() const { return static_cast<int>(w_k.rows()); }
    int key_width() const { return static_cast<int>(w_k.cols()); }
    int value_width() const { return static_cast<int>(w_v.cols()); }

    void validate() const;
};

enum class AttentionMode { kkv, vvv, kqv };

std::string_view to_string(AttentionMode mode);
AttentionMode parse_attention_mode(std::string_view name);

using TokenTransform = std::function<Matrix(const Matrix&)>;

struct BlockConfig {
    int delta = 7; // 1-based block index where the parallel stream starts
    AttentionMode mode = AttentionMode::kkv;
    TokenTransform ffn; // token-wise f_FFN; empty means identity
};

Matrix attention_kkv(const TokenFeatures& features, const HeadProjections& proj);
Matrix attention_kqv(const TokenFeatures& features, const HeadProjections& proj);
Matrix attention_vvv(const TokenFeatures& features, const HeadProjections& proj);
Matrix attention(const TokenFeatures& features, const HeadProjections& proj, AttentionMode mode);

// Softmax matrices (L x L), one per head. Exposed for inspection and tests.
std::vector<Matrix> attention_weights(const TokenFeatures& features, const HeadProjections& proj,
                                      AttentionMode mode);

struct DualPathOutput {
    TokenFeatures next;
    std::optional<TokenFeatures> alt_next;
};

// One encoder block at 1-based depth m.
//   next     = ffn(kqv(s) + s)
//   alt_next = none                      if m <  delta
//              ffn(mode(s) + s)          if m == delta
//              ffn(mode(s) + alt)        if m >  delta
// `alt` must be absent iff m <= delta.
DualPathOutput dual_path_step(const TokenFeatures& s, const std::optional<TokenFeatures>& alt, int m,
                              const BlockConfig& cfg, const HeadProjections& proj);

} // namespace tgseg
