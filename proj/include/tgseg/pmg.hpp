#pragma once

// Progressive mask generation: a forward-only test-time adaptation loop.
//
// Each round encodes the current input, builds the consensus heatmap,
// prompts the segmenter and then darkens low-heat pixels for the next round:
//   X' = X * H * w_pic + X * (1 - w_pic)
// After the last round the mask closest to the mean mask is kept.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tgseg/backends.hpp"
#include "tgseg/cctp.hpp"
#include "tgseg/heatmap.hpp"
#include "tgseg/visual_prompts.hpp"

namespace tgseg {

enum class ReweightBase { original, compounding };
enum class SegmentInput { weighted, original };
enum class SelectionNorm { l1, l2 };

struct PMGConfig {
    double w_pic = 0.3;
    int iterations = 6;
    ReweightBase reweight_base = ReweightBase::original;
    SegmentInput segment_input = SegmentInput::weighted;
    SelectionNorm selection_norm = SelectionNorm::l1;

    void validate() const;
};

struct PipelineConfig {
    TaskPrompt prompt{"the camouflaged animal", {"hidden animal", "concealed animal"}};
    double threshold = 0.90;
    double upsample_factor = 2.0;
    PostMode post = PostMode::max_iou_box;
    bool use_background = true;
    CctpOptions cctp;
    PMGConfig pmg;
};

struct IterationRecord {
    std::uint64_t input_digest = 0;
    Heatmap heatmap;
    PromptSet prompts;
    BinaryMask mask;
};

struct IterationTrace {
    std::vector<IterationRecord> records;
    int selected_index = 0; // 1-based; 0 when no round completed
    RealGrid mean_mask;
    CctpResult cctp;
    std::string error; // empty on success

    bool ok() const { return error.empty(); }
    const BinaryMask& final_mask() const;
};

// Per pixel and channel. Heat must match the image extent and lie in [0, 1].
Image reweight(const Image& image, const RealGrid& heat, double w_pic);

struct Selection {
    int index = 0; // 1-based
    BinaryMask mask;
    RealGrid mean_mask;
};

// argmin_i |M_i - mean(M)|, smallest index on ties.
Selection select_final(const std::vector<BinaryMask>& masks, SelectionNorm norm = SelectionNorm::l1);

// Text features for the bundle, chain-indexed and polarity-tagged.
std::pair<std::vector<TextFeature>, std::vector<TextFeature>> encode_keywords(const KeywordBundle& keywords,
                                                                            const EncoderBackend& encoder);

// The whole loop for one image. Backend failures after CCTP truncate the
// trace and record the error; selection runs over completed rounds.
IterationTrace run_pmg(const ImageRef& image, const PipelineConfig& cfg, Backends& backends);

} // namespace tgseg
