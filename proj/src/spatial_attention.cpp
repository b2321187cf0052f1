#include "tgseg/spatial_attention.hpp"

#include <cmath>
#include <string>

namespace tgseg {

int TokenFeatures::grid_side() const {
    require(length() >= 2, "TokenFeatures: need a class token and at least one patch");
    const int patches = length() - 1;
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(patches))));
    require(side * side == patches, "TokenFeatures: patch count " + std::to_string(patches) + " is not square");
    return side;
}

HeadProjections HeadProjections::with_default_scale(Matrix w_k, Matrix w_q, Matrix w_v, int num_heads) {
    require(num_heads >= 1, "HeadProjections: num_heads must be >= 1");
    require(w_k.cols() % num_heads == 0, "HeadProjections: d_k not divisible by num_heads");
    HeadProjections p;
    const double head_width = static_cast<double>(w_k.cols()) / num_heads;
    p.w_k = std::move(w_k);
    p.w_q = std::move(w_q);
    p.w_v = std::move(w_v);
    p.num_heads = num_heads;
    p.scale = 1.0 / std::sqrt(head_width);
    return p;
}

void HeadProjections::validate() const {
    require(num_heads >= 1, "HeadProjections: num_heads must be >= 1");
    require(scale > 0.0 && std::isfinite(scale), "HeadProjections: scale must be positive");
    require(w_q.rows() == w_k.rows() && w_v.rows() == w_k.rows(), "HeadProjections: input widths differ");
    require(w_q.cols() == w_k.cols(), "HeadProjections: d_q must equal d_k");
    require(w_k.cols() % num_heads == 0, "HeadProjections: d_k not divisible by num_heads");
    require(w_v.cols() % num_heads == 0, "HeadProjections: d_v not divisible by num_heads");
    require(w_k.cols() > 0 && w_v.cols() > 0, "HeadProjections: empty projection");
}

std::string_view to_string(AttentionMode mode) {
    switch (mode) {
    case AttentionMode::kkv: return "kkv";
    case AttentionMode::vvv: return "vvv";
    case AttentionMode::kqv: return "kqv";
    }
    return "?";
}

AttentionMode parse_attention_mode(std::string_view name) {
    if (name == "kkv") return AttentionMode::kkv;
    if (name == "vvv") return AttentionMode::vvv;
    if (name == "kqv") return AttentionMode::kqv;
    throw ContractViolation("unknown attention mode: " + std::string(name));
}

namespace {

void check_inputs(const TokenFeatures& f, const HeadProjections& p) {
    p.validate();
    require(f.length() >= 1, "attention: no tokens");
    require(f.width() == p.in_width(), "attention: feature width " + std::to_string(f.width()) +
                                           " does not match projection input " + std::to_string(p.in_width()));
    require(f.tokens.allFinite(), "attention: non-finite token features");
}

struct Projected {
    Matrix k, q, v;
};

Projected project(const TokenFeatures& f, const HeadProjections& p, AttentionMode mode) {
    Projected out;
    out.v = f.tokens * p.w_v;
    if (mode != AttentionMode::vvv) out.k = f.tokens * p.w_k;
    if (mode == AttentionMode::kqv) out.q = f.tokens * p.w_q;
    return out;
}

// Rows are stabilized by their max before exponentiation.
Matrix row_softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double mx = logits.row(r).maxCoeff();
        out.row(r) = (logits.row(r).array() - mx).exp().matrix();
        out.row(r) /= out.row(r).sum();
    }
    return out;
}

Matrix head_logits(const Projected& pr, const HeadProjections& p, AttentionMode mode, int head) {
    const auto kw = p.key_width() / p.num_heads;
    const auto vw = p.value_width() / p.num_heads;
    switch (mode) {
    case AttentionMode::kkv: {
        auto k = pr.k.middleCols(head * kw, kw);
        return (k * k.transpose()) * p.scale;
    }
    case AttentionMode::kqv: {
        auto k = pr.k.middleCols(head * kw, kw);
        auto q = pr.q.middleCols(head * kw, kw);
        return (q * k.transpose()) * p.scale;
    }
    case AttentionMode::vvv: {
        auto v = pr.v.middleCols(head * vw, vw);
        return (v * v.transpose()) * p.scale;
    }
    }
    throw ContractViolation("attention: bad mode");
}

} // namespace

std::vector<Matrix> attention_weights(const TokenFeatures& features, const HeadProjections& proj,
                                      AttentionMode mode) {
    check_inputs(features, proj);
    const Projected pr = project(features, proj, mode);
    std::vector<Matrix> out;
    out.reserve(proj.num_heads);
    for (int h = 0; h < proj.num_heads; ++h) out.push_back(row_softmax(head_logits(pr, proj, mode, h)));
    return out;
}

Matrix attention(const TokenFeatures& features, const HeadProjections& proj, AttentionMode mode) {
    check_inputs(features, proj);
    const Projected pr = project(features, proj, mode);
    const auto vw = proj.value_width() / proj.num_heads;
    Matrix out(features.length(), proj.value_width());
    for (int h = 0; h < proj.num_heads; ++h) {
        const Matrix weights = row_softmax(head_logits(pr, proj, mode, h));
        out.middleCols(h * vw, vw).noalias() = weights * pr.v.middleCols(h * vw, vw);
    }
    return out;
}

Matrix attention_kkv(const TokenFeatures& features, const HeadProjections& proj) {
    return attention(features, proj, AttentionMode::kkv);
}

Matrix attention_kqv(const TokenFeatures& features, const HeadProjections& proj) {
    return attention(features, proj, AttentionMode::kqv);
}

Matrix attention_vvv(const TokenFeatures& features, const HeadProjections& proj) {
    return attention(features, proj, AttentionMode::vvv);
}

DualPathOutput dual_path_step(const TokenFeatures& s, const std::optional<TokenFeatures>& alt, int m,
                              const BlockConfig& cfg, const HeadProjections& proj) {
    require(cfg.delta >= 1, "dual_path_step: delta must be >= 1");
    require(m >= 1, "dual_path_step: block index is 1-based");
    if (m <= cfg.delta) {
        require(!alt.has_value(), "dual_path_step: parallel stream present before block delta");
    } else {
        require(alt.has_value(), "dual_path_step: parallel stream missing after block delta");
    }
    require(proj.value_width() == s.width(), "dual_path_step: residual needs d_v == d");
    if (alt) require(alt->tokens.rows() == s.tokens.rows() && alt->tokens.cols() == s.tokens.cols(),
                     "dual_path_step: stream shapes differ");

    auto ffn = [&](const Matrix& x) { return cfg.ffn ? cfg.ffn(x) : x; };

    DualPathOutput out;
    out.next.tokens = ffn(attention_kqv(s, proj) + s.tokens);
    out.next.layer_index = m + 1;
    if (m >= cfg.delta) {
        const Matrix& residual = (m == cfg.delta) ? s.tokens : alt->tokens;
        TokenFeatures a;
        a.tokens = ffn(attention(s, proj, cfg.mode) + residual);
        a.layer_index = m + 1;
        out.alt_next = std::move(a);
    }
    return out;
}

} // namespace tgseg
