#pragma once

// Model backend interfaces plus deterministic mock implementations.
//
// Real adapters (captioning VQA model, dual-stream CLIP encoder, promptable
// segmenter) implement the same three interfaces and register themselves in
// BackendRegistry under a name chosen by configuration.

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tgseg/common.hpp"
#include "tgseg/heatmap.hpp"
#include "tgseg/spatial_attention.hpp"
#include "tgseg/visual_prompts.hpp"

namespace tgseg {

struct Capabilities {
    bool concurrent_safe = false;
    bool deterministic = true;
};

struct ImageRef {
    std::string id;
    const Image* pixels = nullptr;
};

// ----------------------------------------------------------------------------
// Caption / question answering

enum class QueryKind { foreground, background };

struct QaTurn {
    std::string question;
    std::string answer;
};

// One question in a chain, with the conversation that precedes it.
// `slot` is the template argument: the task variant for foreground
// questions, the parsed foreground keyword for background questions.
struct QaRequest {
    QueryKind kind = QueryKind::foreground;
    std::string template_id;
    std::string slot;
    std::string caption;
    std::vector<QaTurn> history;
    std::string question;
};

class CaptionQABackend {
  public:
    virtual ~CaptionQABackend() = default;
    virtual Capabilities capabilities() const = 0;
    virtual std::string caption(const ImageRef& image) = 0;
    virtual std::string answer(const ImageRef& image, const QaRequest& request) = 0;
};

class FixtureError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Answers looked up from a JSON fixture:
//   {"version": 1,
//    "images": {"<id>": {"caption": "...",
//                        "fore": {"<variant>": "<answer>", "*": "<default>"},
//                        "back": {"<fore keyword>": "<answer>", "*": "<default>"}}}}
class MockCaptionQA final : public CaptionQABackend {
  public:
    explicit MockCaptionQA(nlohmann::json fixture);
    static std::shared_ptr<MockCaptionQA> from_file(const std::filesystem::path& path);

    Capabilities capabilities() const override { return {true, true}; }
    std::string caption(const ImageRef& image) override;
    std::string answer(const ImageRef& image, const QaRequest& request) override;

    const nlohmann::json& fixture() const { return fixture_; }
    void save(const std::filesystem::path& path) const;

    // Total caption + answer calls served.
    std::uint64_t query_count() const { return queries_.load(); }

  private:
    const nlohmann::json& image_entry(const std::string& id) const;

    nlohmann::json fixture_;
    std::atomic<std::uint64_t> queries_{0};
};

// ----------------------------------------------------------------------------
// Dual-stream encoder

struct EncodedImage {
    ImageFeatures original;  // k-q-v stream
    ImageFeatures alternate; // parallel stream used for the heatmap
};

class EncoderBackend {
  public:
    virtual ~EncoderBackend() = default;
    virtual Capabilities capabilities() const = 0;
    virtual int grid_side() const = 0;
    virtual int channels() const = 0;
    virtual EncodedImage encode_image(const Image& image) const = 0;
    virtual Vector encode_text(const std::string& keyword) const = 0;
};

struct MockEncoderConfig {
    std::uint64_t seed = 7;
    int grid_side = 16;
    int width = 32; // token channels d
    int heads = 4;
    int layers = 4;
    int delta = 2;
    AttentionMode mode = AttentionMode::kkv;
};

// Seeded weights of the mock encoder. FFN of block m is x -> tanh(x * ffn_w[m] + ffn_b[m]).
struct MockEncoderWeights {
    int width = 0;
    int heads = 0;
    int layers = 0;
    std::uint64_t seed = 0;
    Matrix embed;    // 4 x d: rows are (r, g, b, bias)
    Vector cls;      // d
    std::vector<HeadProjections> blocks;
    std::vector<Matrix> ffn_w; // d x d
    std::vector<Vector> ffn_b; // d

    static MockEncoderWeights generate(std::uint64_t seed, int width, int heads, int layers);

    // Flat little-endian file: "TGSW", u32 version, u32 d, u32 heads, u32 layers,
    // u64 seed, then float64 arrays in declaration order (per block: w_k, w_q,
    // w_v, scale, ffn_w, ffn_b).
    void save(const std::filesystem::path& path) const;
    static MockEncoderWeights load(const std::filesystem::path& path);

    TokenTransform ffn(int block) const; // 1-based
};

class MockEncoder final : public EncoderBackend {
  public:
    explicit MockEncoder(MockEncoderConfig cfg);
    MockEncoder(MockEncoderConfig cfg, MockEncoderWeights weights);

    Capabilities capabilities() const override { return {true, true}; }
    int grid_side() const override { return cfg_.grid_side; }
    int channels() const override { return weights_.width; }
    EncodedImage encode_image(const Image& image) const override;
    Vector encode_text(const std::string& keyword) const override;

    // Layer-1 tokens: class token plus one embedded token per patch.
    TokenFeatures embed(const Image& image) const;

    // Both streams after the final block (class token included).
    std::pair<TokenFeatures, TokenFeatures> forward(const TokenFeatures& input) const;

    // RGB the encoder associates with a keyword; synthetic scenes paint with it.
    std::array<double, 3> keyword_color(const std::string& keyword) const;

    const MockEncoderConfig& config() const { return cfg_; }
    const MockEncoderWeights& weights() const { return weights_; }

  private:
    struct TextCache {
        std::mutex lock;
        std::map<std::string, Vector> vectors;
    };

    MockEncoderConfig cfg_;
    MockEncoderWeights weights_;
    std::shared_ptr<TextCache> text_cache_ = std::make_shared<TextCache>();
};

// Mean color of each cell of a side x side partition of the image.
std::vector<std::array<double, 3>> patch_means(const Image& image, int side);

// ----------------------------------------------------------------------------
// Promptable segmenter

struct MaskCandidate {
    BinaryMask mask;
    double score = 0.0;
};

class SegmenterBackend {
  public:
    virtual ~SegmenterBackend() = default;
    virtual Capabilities capabilities() const = 0;
    virtual std::vector<MaskCandidate> segment(const Image& image, const PromptSet& prompts) const = 0;
};

// Union of disks around positives minus disks around negatives, clipped to
// the box. A dense mask prompt limits the output to within one radius of it.
// Score is the fraction of positives inside the box (1 without a box).
class MockSegmenter final : public SegmenterBackend {
  public:
    explicit MockSegmenter(double radius_fraction = 0.06) : radius_fraction_(radius_fraction) {}
    Capabilities capabilities() const override { return {true, true}; }
    std::vector<MaskCandidate> segment(const Image& image, const PromptSet& prompts) const override;
    double radius_for(int rows, int cols) const;

  private:
    double radius_fraction_;
};

// Highest score wins; ties go to the first candidate.
const BinaryMask& select_candidate(const std::vector<MaskCandidate>& candidates);

// ----------------------------------------------------------------------------
// Discovery

struct Backends {
    std::shared_ptr<CaptionQABackend> qa;
    std::shared_ptr<EncoderBackend> encoder;
    std::shared_ptr<SegmenterBackend> segmenter;

    bool concurrent_safe() const;
};

struct BackendOptions {
    std::uint64_t seed = 7;
    AttentionMode attention = AttentionMode::kkv;
    std::filesystem::path fixture;
    MockEncoderConfig encoder;
};

class BackendRegistry {
  public:
    using Factory = std::function<Backends(const BackendOptions&)>;

    static BackendRegistry& instance();
    void add(const std::string& name, Factory factory);
    Backends create(const std::string& name, const BackendOptions& opts) const;
    std::vector<std::string> names() const;

  private:
    BackendRegistry();
    std::map<std::string, Factory> factories_;
};

} // namespace tgseg
