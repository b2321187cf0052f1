#include "tgseg/backends.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace tgseg {

using nlohmann::json;

// ----------------------------------------------------------------------------
// MockCaptionQA

MockCaptionQA::MockCaptionQA(json fixture) : fixture_(std::move(fixture)) {
    if (!fixture_.is_object() || !fixture_.contains("images") || !fixture_["images"].is_object())
        throw FixtureError("fixture: missing \"images\" object");
}

std::shared_ptr<MockCaptionQA> MockCaptionQA::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FixtureError("fixture: cannot open " + path.string());
    try {
        return std::make_shared<MockCaptionQA>(json::parse(in));
    } catch (const json::parse_error& e) {
        throw FixtureError("fixture: " + path.string() + ": " + e.what());
    }
}

void MockCaptionQA::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw FixtureError("fixture: cannot write " + path.string());
    out << fixture_.dump(2) << '\n';
}

const json& MockCaptionQA::image_entry(const std::string& id) const {
    const auto& images = fixture_["images"];
    auto it = images.find(id);
    if (it == images.end()) throw FixtureError("fixture: unknown image id '" + id + "'");
    return *it;
}

std::string MockCaptionQA::caption(const ImageRef& image) {
    ++queries_;
    const auto& entry = image_entry(image.id);
    if (!entry.contains("caption")) throw FixtureError("fixture: no caption for '" + image.id + "'");
    return entry["caption"].get<std::string>();
}

std::string MockCaptionQA::answer(const ImageRef& image, const QaRequest& request) {
    ++queries_;
    const auto& entry = image_entry(image.id);
    const char* table = request.kind == QueryKind::foreground ? "fore" : "back";
    if (!entry.contains(table)) throw FixtureError(std::string("fixture: no '") + table + "' table for '" + image.id + "'");
    const auto& answers = entry[table];
    if (auto it = answers.find(request.slot); it != answers.end()) return it->get<std::string>();
    if (auto it = answers.find("*"); it != answers.end()) return it->get<std::string>();
    throw FixtureError("fixture: no " + std::string(table) + " answer for '" + request.slot + "' in '" + image.id + "'");
}

// ----------------------------------------------------------------------------
// MockEncoderWeights

namespace {

Matrix gaussian(std::mt19937_64& rng, int rows, int cols, double stddev) {
    std::normal_distribution<double> nd(0.0, stddev);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    return m;
}

constexpr char kMagic[4] = {'T', 'G', 'S', 'W'};
constexpr std::uint32_t kWeightsVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ContractViolation("weights file truncated");
    return v;
}

void put_array(std::ostream& out, const double* p, Eigen::Index n) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void get_array(std::istream& in, double* p, Eigen::Index n) {
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw ContractViolation("weights file truncated");
}

} // namespace

MockEncoderWeights MockEncoderWeights::generate(std::uint64_t seed, int width, int heads, int layers) {
    require(width >= 1 && heads >= 1 && width % heads == 0, "MockEncoderWeights: width must divide into heads");
    require(layers >= 1, "MockEncoderWeights: need at least one block");
    std::mt19937_64 rng(seed);
    MockEncoderWeights w;
    w.width = width;
    w.heads = heads;
    w.layers = layers;
    w.seed = seed;
    const double inv = 1.0 / std::sqrt(static_cast<double>(width));
    w.embed = gaussian(rng, 4, width, 1.0);
    w.embed.row(3) *= 0.3;
    w.cls = gaussian(rng, width, 1, 0.5);
    for (int m = 0; m < layers; ++m) {
        Matrix wk = gaussian(rng, width, width, 2.0 * inv);
        Matrix wq = gaussian(rng, width, width, 2.0 * inv);
        Matrix wv = gaussian(rng, width, width, 0.5 * inv);
        w.blocks.push_back(HeadProjections::with_default_scale(std::move(wk), std::move(wq), std::move(wv), heads));
        w.ffn_w.push_back(Matrix::Identity(width, width) + gaussian(rng, width, width, 0.2 * inv));
        w.ffn_b.push_back(gaussian(rng, width, 1, 0.05));
    }
    return w;
}

TokenTransform MockEncoderWeights::ffn(int block) const {
    require(block >= 1 && block <= layers, "MockEncoderWeights: block out of range");
    const Matrix& a = ffn_w[block - 1];
    const Vector& b = ffn_b[block - 1];
    return [&a, &b](const Matrix& x) -> Matrix {
        Matrix y = x * a;
        y.rowwise() += b.transpose();
        return y.array().tanh().matrix();
    };
}

void MockEncoderWeights::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ContractViolation("cannot write weights to " + path.string());
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kWeightsVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(width));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(heads));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(layers));
    put<std::uint64_t>(out, seed);
    put_array(out, embed.data(), embed.size());
    put_array(out, cls.data(), cls.size());
    for (int m = 0; m < layers; ++m) {
        put_array(out, blocks[m].w_k.data(), blocks[m].w_k.size());
        put_array(out, blocks[m].w_q.data(), blocks[m].w_q.size());
        put_array(out, blocks[m].w_v.data(), blocks[m].w_v.size());
        put<double>(out, blocks[m].scale);
        put_array(out, ffn_w[m].data(), ffn_w[m].size());
        put_array(out, ffn_b[m].data(), ffn_b[m].size());
    }
}

MockEncoderWeights MockEncoderWeights::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractViolation("cannot read weights from " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ContractViolation("not a weights file: " + path.string());
    if (get<std::uint32_t>(in) != kWeightsVersion) throw ContractViolation("unsupported weights version");
    MockEncoderWeights w;
    w.width = static_cast<int>(get<std::uint32_t>(in));
    w.heads = static_cast<int>(get<std::uint32_t>(in));
    w.layers = static_cast<int>(get<std::uint32_t>(in));
    w.seed = get<std::uint64_t>(in);
    const int d = w.width;
    require(d >= 1 && w.heads >= 1 && w.layers >= 1 && d % w.heads == 0, "weights header is inconsistent");
    w.embed.resize(4, d);
    get_array(in, w.embed.data(), w.embed.size());
    w.cls.resize(d);
    get_array(in, w.cls.data(), d);
    for (int m = 0; m < w.layers; ++m) {
        HeadProjections p;
        p.num_heads = w.heads;
        p.w_k.resize(d, d);
        p.w_q.resize(d, d);
        p.w_v.resize(d, d);
        get_array(in, p.w_k.data(), p.w_k.size());
        get_array(in, p.w_q.data(), p.w_q.size());
        get_array(in, p.w_v.data(), p.w_v.size());
        p.scale = get<double>(in);
        p.validate();
        w.blocks.push_back(std::move(p));
        Matrix a(d, d);
        get_array(in, a.data(), a.size());
        Vector b(d);
        get_array(in, b.data(), d);
        w.ffn_w.push_back(std::move(a));
        w.ffn_b.push_back(std::move(b));
    }
    return w;
}

// ----------------------------------------------------------------------------
// MockEncoder

std::vector<std::array<double, 3>> patch_means(const Image& image, int side) {
    require(side >= 1, "patch_means: side must be positive");
    require(image.channels >= 1, "patch_means: image has no channels");
    std::vector<std::array<double, 3>> sums(static_cast<std::size_t>(side) * side, {0.0, 0.0, 0.0});
    std::vector<int> counts(sums.size(), 0);
    for (int y = 0; y < image.height; ++y) {
        const int pr = std::min(side - 1, static_cast<int>((y + 0.5) * side / image.height));
        for (int x = 0; x < image.width; ++x) {
            const int pc = std::min(side - 1, static_cast<int>((x + 0.5) * side / image.width));
            auto& s = sums[static_cast<std::size_t>(pr) * side + pc];
            for (int c = 0; c < 3; ++c) s[c] += image.at(y, x, std::min(c, image.channels - 1));
            ++counts[static_cast<std::size_t>(pr) * side + pc];
        }
    }
    for (std::size_t i = 0; i < sums.size(); ++i)
        if (counts[i] > 0)
            for (auto& v : sums[i]) v /= counts[i];
    return sums;
}

MockEncoder::MockEncoder(MockEncoderConfig cfg)
    : MockEncoder(cfg, MockEncoderWeights::generate(cfg.seed, cfg.width, cfg.heads, cfg.layers)) {}

MockEncoder::MockEncoder(MockEncoderConfig cfg, MockEncoderWeights weights)
    : cfg_(cfg), weights_(std::move(weights)) {
    require(cfg_.grid_side >= 2, "MockEncoder: grid side must be >= 2");
    require(cfg_.delta >= 1 && cfg_.delta <= weights_.layers, "MockEncoder: delta must lie within the block stack");
    cfg_.width = weights_.width;
    cfg_.heads = weights_.heads;
    cfg_.layers = weights_.layers;
}

TokenFeatures MockEncoder::embed(const Image& image) const {
    const auto means = patch_means(image, cfg_.grid_side);
    TokenFeatures t;
    t.layer_index = 1;
    t.tokens.resize(static_cast<Eigen::Index>(means.size()) + 1, weights_.width);
    t.tokens.row(0) = weights_.cls.transpose();
    for (std::size_t i = 0; i < means.size(); ++i) {
        const auto& c = means[i];
        const double k = 0.5 / std::max((c[0] + c[1] + c[2]) / 3.0, 1e-3);
        Eigen::RowVector4d phi(k * c[0] - 0.5, k * c[1] - 0.5, k * c[2] - 0.5, 1.0);
        t.tokens.row(static_cast<Eigen::Index>(i) + 1) = phi * weights_.embed;
    }
    return t;
}

std::pair<TokenFeatures, TokenFeatures> MockEncoder::forward(const TokenFeatures& input) const {
    TokenFeatures s = input;
    std::optional<TokenFeatures> alt;
    for (int m = 1; m <= weights_.layers; ++m) {
        BlockConfig bc{cfg_.delta, cfg_.mode, weights_.ffn(m)};
        auto out = dual_path_step(s, alt, m, bc, weights_.blocks[m - 1]);
        s = std::move(out.next);
        alt = std::move(out.alt_next);
    }
    return {std::move(s), std::move(*alt)};
}

EncodedImage MockEncoder::encode_image(const Image& image) const {
    auto [orig, alt] = forward(embed(image));
    const auto n = orig.tokens.rows() - 1;
    EncodedImage out;
    out.original.grid_side = cfg_.grid_side;
    out.original.patch_features = orig.tokens.bottomRows(n);
    out.alternate.grid_side = cfg_.grid_side;
    out.alternate.patch_features = alt.tokens.bottomRows(n);
    return out;
}

std::array<double, 3> MockEncoder::keyword_color(const std::string& keyword) const {
    const std::uint64_t h = fnv1a64(keyword.data(), keyword.size(), 0xcbf29ce484222325ULL ^ (cfg_.seed * 0x9e3779b97f4a7c15ULL));
    std::mt19937_64 rng(h);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    return {u(rng), u(rng), u(rng)};
}

Vector MockEncoder::encode_text(const std::string& keyword) const {
    // The keyword vector is the parallel-stream response to a uniform field of
    // the keyword's color, so patches painted with it align with the text.
    {
        std::lock_guard guard(text_cache_->lock);
        if (auto it = text_cache_->vectors.find(keyword); it != text_cache_->vectors.end()) return it->second;
    }
    const auto color = keyword_color(keyword);
    Image field(cfg_.grid_side, cfg_.grid_side, 3);
    for (int y = 0; y < field.height; ++y)
        for (int x = 0; x < field.width; ++x)
            for (int c = 0; c < 3; ++c) field.at(y, x, c) = color[c];
    auto [orig, alt] = forward(embed(field));
    Vector v = alt.tokens.row(1).transpose();
    const double n = v.norm();
    if (!(n > 1e-12)) throw DegenerateFeature("mock encoder produced a zero text vector for '" + keyword + "'");
    v /= n;
    std::lock_guard guard(text_cache_->lock);
    text_cache_->vectors.emplace(keyword, v);
    return v;
}

// ----------------------------------------------------------------------------
// MockSegmenter

double MockSegmenter::radius_for(int rows, int cols) const {
    return radius_fraction_ * std::min(rows, cols);
}

std::vector<MaskCandidate> MockSegmenter::segment(const Image& image, const PromptSet& prompts) const {
    const int rows = image.height, cols = image.width;
    const double r = radius_for(rows, cols);
    const double r2 = r * r;
    auto near_any = [r2](const std::vector<Point>& pts, double px, double py) {
        for (const auto& p : pts) {
            const double dx = px - p.x, dy = py - p.y;
            if (dx * dx + dy * dy <= r2) return true;
        }
        return false;
    };

    // Distance check against the dense prompt uses a square window of radius r.
    const int ri = static_cast<int>(std::ceil(r));
    BinaryMask near_prompt;
    if (prompts.mask) {
        require(prompts.mask->rows == rows && prompts.mask->cols == cols, "mock segmenter: mask prompt shape");
        near_prompt = BinaryMask(rows, cols, 0);
        for (int y = 0; y < rows; ++y)
            for (int x = 0; x < cols; ++x) {
                if (!(*prompts.mask)(y, x)) continue;
                for (int yy = std::max(0, y - ri); yy <= std::min(rows - 1, y + ri); ++yy)
                    for (int xx = std::max(0, x - ri); xx <= std::min(cols - 1, x + ri); ++xx)
                        if ((yy - y) * (yy - y) + (xx - x) * (xx - x) <= r2) near_prompt(yy, xx) = 1;
            }
    }

    MaskCandidate cand;
    cand.mask = BinaryMask(rows, cols, 0);
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            if (prompts.box && (x < prompts.box->x0 || x >= prompts.box->x1 || y < prompts.box->y0 || y >= prompts.box->y1))
                continue;
            if (prompts.mask && !near_prompt(y, x)) continue;
            if (near_any(prompts.positives, px, py) && !near_any(prompts.negatives, px, py)) cand.mask(y, x) = 1;
        }
    }
    cand.score = 1.0;
    if (prompts.box && !prompts.positives.empty()) {
        int inside = 0;
        for (const auto& p : prompts.positives)
            if (p.x >= prompts.box->x0 && p.x <= prompts.box->x1 && p.y >= prompts.box->y0 && p.y <= prompts.box->y1)
                ++inside;
        cand.score = static_cast<double>(inside) / static_cast<double>(prompts.positives.size());
    }
    return {std::move(cand)};
}

const BinaryMask& select_candidate(const std::vector<MaskCandidate>& candidates) {
    require(!candidates.empty(), "select_candidate: no candidates");
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (candidates[i].score > candidates[best].score) best = i;
    return candidates[best].mask;
}

// ----------------------------------------------------------------------------
// Registry

bool Backends::concurrent_safe() const {
    return qa && encoder && segmenter && qa->capabilities().concurrent_safe &&
           encoder->capabilities().concurrent_safe && segmenter->capabilities().concurrent_safe;
}

BackendRegistry::BackendRegistry() {
    factories_["mock"] = [](const BackendOptions& opts) {
        Backends b;
        if (opts.fixture.empty()) throw FixtureError("mock backend needs a caption/QA fixture file");
        b.qa = MockCaptionQA::from_file(opts.fixture);
        MockEncoderConfig ec = opts.encoder;
        ec.seed = opts.seed;
        ec.mode = opts.attention;
        b.encoder = std::make_shared<MockEncoder>(ec);
        b.segmenter = std::make_shared<MockSegmenter>();
        return b;
    };
}

BackendRegistry& BackendRegistry::instance() {
    static BackendRegistry registry;
    return registry;
}

void BackendRegistry::add(const std::string& name, Factory factory) { factories_[name] = std::move(factory); }

Backends BackendRegistry::create(const std::string& name, const BackendOptions& opts) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) {
        std::string known;
        for (const auto& [k, _] : factories_) known += (known.empty() ? "" : ", ") + k;
        throw ContractViolation("unknown backend '" + name + "' (registered: " + known + ")");
    }
    return it->second(opts);
}

std::vector<std::string> BackendRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : factories_) out.push_back(k);
    return out;
}

} // namespace tgseg
