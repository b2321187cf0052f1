#include "tgseg/pmg.hpp"

#include <cmath>
#include <limits>

namespace tgseg {

void PMGConfig::validate() const {
    require(w_pic >= 0.0 && w_pic <= 1.0, "PMGConfig: w_pic must be in [0, 1]");
    require(iterations >= 1, "PMGConfig: iterations must be >= 1");
}

const BinaryMask& IterationTrace::final_mask() const {
    require(selected_index >= 1 && selected_index <= static_cast<int>(records.size()),
            "IterationTrace: no selected mask");
    return records[selected_index - 1].mask;
}

Image reweight(const Image& image, const RealGrid& heat, double w_pic) {
    require(heat.rows == image.height && heat.cols == image.width, "reweight: heatmap and image shapes differ");
    require(w_pic >= 0.0 && w_pic <= 1.0, "reweight: w_pic must be in [0, 1]");
    Image out = image;
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            // X*H*w + X*(1-w) == X*(1 - w*(1-H)); this form keeps H = 1 exact.
            const double gain = 1.0 - w_pic * (1.0 - heat(y, x));
            for (int c = 0; c < image.channels; ++c) out.at(y, x, c) = image.at(y, x, c) * gain;
        }
    return out;
}

Selection select_final(const std::vector<BinaryMask>& masks, SelectionNorm norm) {
    require(!masks.empty(), "select_final: no masks");
    const auto& first = masks.front();
    for (const auto& m : masks) require(m.same_shape(first), "select_final: mask shapes differ");

    Selection sel;
    sel.mean_mask = RealGrid(first.rows, first.cols, 0.0);
    for (const auto& m : masks)
        for (std::size_t p = 0; p < m.size(); ++p) sel.mean_mask.data[p] += m.data[p];
    const double n = static_cast<double>(masks.size());
    for (auto& v : sel.mean_mask.data) v /= n;

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < masks.size(); ++i) {
        double dist = 0.0;
        for (std::size_t p = 0; p < first.size(); ++p) {
            const double d = masks[i].data[p] - sel.mean_mask.data[p];
            dist += norm == SelectionNorm::l1 ? std::abs(d) : d * d;
        }
        if (dist < best) {
            best = dist;
            sel.index = static_cast<int>(i) + 1;
        }
    }
    sel.mask = masks[sel.index - 1];
    return sel;
}

std::pair<std::vector<TextFeature>, std::vector<TextFeature>> encode_keywords(const KeywordBundle& keywords,
                                                                            const EncoderBackend& encoder) {
    std::vector<TextFeature> fore, back;
    for (std::size_t j = 0; j < keywords.fore.size(); ++j)
        fore.push_back({encoder.encode_text(keywords.fore[j]), keywords.fore[j], static_cast<int>(j) + 1,
                        Polarity::foreground});
    for (std::size_t j = 0; j < keywords.back.size(); ++j)
        back.push_back({encoder.encode_text(keywords.back[j]), keywords.back[j], static_cast<int>(j) + 1,
                        Polarity::background});
    return {std::move(fore), std::move(back)};
}

IterationTrace run_pmg(const ImageRef& image, const PipelineConfig& cfg, Backends& backends) {
    require(image.pixels != nullptr, "run_pmg: image has no pixels");
    require(backends.qa && backends.encoder && backends.segmenter, "run_pmg: backends not ready");
    cfg.pmg.validate();
    const Image& original = *image.pixels;

    IterationTrace trace;
    try {
        trace.cctp = run_cctp(image, cfg.prompt, *backends.qa, cfg.cctp);
    } catch (const std::exception& e) {
        trace.error = std::string("caption/QA backend: ") + e.what();
        return trace;
    }

    try {
        auto [fore, back] = encode_keywords(trace.cctp.keywords, *backends.encoder);
        if (!cfg.use_background) back.clear();

        Image input = original;
        std::optional<BinaryMask> prev;
        for (int i = 1; i <= cfg.pmg.iterations; ++i) {
            IterationRecord rec;
            rec.input_digest = digest(input);
            const EncodedImage enc = backends.encoder->encode_image(input);
            rec.heatmap = consensus_heatmap(enc.alternate, fore, back, cfg.upsample_factor, input.height, input.width);
            rec.prompts = assemble_prompts(extract_points(rec.heatmap.lattice, cfg.threshold, input.height, input.width),
                                           prev, cfg.post);
            const Image& seg_input = cfg.pmg.segment_input == SegmentInput::weighted ? input : original;
            rec.mask = select_candidate(backends.segmenter->segment(seg_input, rec.prompts));
            require(rec.mask.rows == original.height && rec.mask.cols == original.width,
                    "segmenter returned a mask of the wrong size");
            prev = rec.mask;
            if (i < cfg.pmg.iterations) {
                const Image& base = cfg.pmg.reweight_base == ReweightBase::original ? original : input;
                input = reweight(base, rec.heatmap.grid, cfg.pmg.w_pic);
            }
            trace.records.push_back(std::move(rec));
        }
    } catch (const std::exception& e) {
        trace.error = "iteration " + std::to_string(trace.records.size() + 1) + ": " + e.what();
    }

    if (!trace.records.empty()) {
        std::vector<BinaryMask> masks;
        for (const auto& r : trace.records) masks.push_back(r.mask);
        auto sel = select_final(masks, cfg.pmg.selection_norm);
        trace.selected_index = sel.index;
        trace.mean_mask = std::move(sel.mean_mask);
    }
    return trace;
}

} // namespace tgseg
