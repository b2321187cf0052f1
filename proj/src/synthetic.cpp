#include "tgseg/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>

namespace tgseg {

namespace {

const std::vector<std::string>& fore_vocab() {
    static const std::vector<std::string> v = {"grasshopper", "frog",  "lizard", "crab",  "owl",   "moth",
                                               "flounder",    "snake", "spider", "toad",  "gecko", "katydid"};
    return v;
}

const std::vector<std::string>& back_vocab() {
    static const std::vector<std::string> v = {"leaves", "sand", "bark", "rock", "grass", "moss", "coral", "soil"};
    return v;
}

struct Ellipse {
    double cx, cy, rx, ry;
    bool contains(double x, double y) const {
        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
        return dx * dx + dy * dy <= 1.0;
    }
};

} // namespace

SyntheticScene make_scene(const MockEncoder& encoder, int index, const SceneOptions& opts) {
    require(opts.rows >= 16 && opts.cols >= 16, "make_scene: image too small");
    std::mt19937_64 rng(opts.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(index) * 0xbf58476d1ce4e5b9ULL);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.03);

    SyntheticScene s;
    char id[32];
    std::snprintf(id, sizeof(id), "scene_%03d", index);
    s.id = id;
    s.fore_keyword = fore_vocab()[rng() % fore_vocab().size()];
    s.back_keyword = back_vocab()[rng() % back_vocab().size()];

    const auto fc = encoder.keyword_color(s.fore_keyword);
    const auto bc = encoder.keyword_color(s.back_keyword);
    const double blend = 0.55 + 0.25 * u(rng); // how far the target leans toward its keyword color
    std::array<double, 3> target{}, distractor{};
    const double dblend = blend * (0.75 + 0.1 * u(rng));
    for (int c = 0; c < 3; ++c) {
        target[c] = bc[c] + blend * (fc[c] - bc[c]);
        distractor[c] = bc[c] + dblend * (fc[c] - bc[c]);
    }

    const double rows = opts.rows, cols = opts.cols;
    const double side = std::min(rows, cols);
    Ellipse blob{cols * (0.3 + 0.4 * u(rng)), rows * (0.3 + 0.4 * u(rng)), side * (0.14 + 0.1 * u(rng)),
                 side * (0.14 + 0.1 * u(rng))};

    std::optional<Ellipse> extra;
    if (u(rng) < 0.5) {
        // Opposite quadrant, well clear of the target.
        const double ex = blob.cx < cols / 2 ? cols * 0.82 : cols * 0.18;
        const double ey = blob.cy < rows / 2 ? rows * 0.82 : rows * 0.18;
        const double er = side * (0.07 + 0.03 * u(rng));
        extra = Ellipse{ex, ey, er, er};
        s.has_distractor = true;
    }

    // Low-frequency shading so the background is not flat.
    const double fx = 2.0 * M_PI * (1.0 + 2.0 * u(rng)) / cols, fy = 2.0 * M_PI * (1.0 + 2.0 * u(rng)) / rows;
    const double phase = 2.0 * M_PI * u(rng);

    s.image = Image(opts.rows, opts.cols, 3);
    s.gt = BinaryMask(opts.rows, opts.cols, 0);
    for (int y = 0; y < opts.rows; ++y) {
        for (int x = 0; x < opts.cols; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            const double shade = 0.04 * std::sin(fx * px + phase) * std::cos(fy * py);
            const std::array<double, 3>* color = &bc;
            if (blob.contains(px, py)) {
                color = &target;
                s.gt(y, x) = 1;
            } else if (extra && extra->contains(px, py)) {
                color = &distractor;
            }
            for (int c = 0; c < 3; ++c) s.image.at(y, x, c) = std::clamp((*color)[c] + shade + noise(rng), 0.0, 1.0);
        }
    }
    return s;
}

std::vector<SyntheticScene> make_scenes(const MockEncoder& encoder, int count, const SceneOptions& opts) {
    std::vector<SyntheticScene> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(make_scene(encoder, i, opts));
    return out;
}

nlohmann::json make_fixture(const std::vector<SyntheticScene>& scenes) {
    nlohmann::json images = nlohmann::json::object();
    for (const auto& s : scenes) {
        nlohmann::json fore = {
            {"camouflaged animal", "A " + s.fore_keyword + "."},
            {"hidden animal", s.fore_keyword},
            {"concealed animal", "I think it is a " + s.fore_keyword + ", maybe."},
            {"*", "the " + s.fore_keyword},
        };
        nlohmann::json back = {{s.fore_keyword, s.back_keyword + "."}, {"*", s.back_keyword}};
        images[s.id] = {
            {"caption", "a " + s.fore_keyword + " on " + s.back_keyword},
            {"fore", std::move(fore)},
            {"back", std::move(back)},
        };
    }
    return {{"version", 1}, {"images", std::move(images)}};
}

} // namespace tgseg
