#pragma once

// Synthetic camouflage scenes for the mock backends.
//
// Each scene paints a textured background with the color the mock encoder
// assigns to a background keyword, and an elliptical target whose color is
// pulled from the foreground keyword's color toward the background. About
// half the scenes also carry a smaller, similarly colored distractor.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tgseg/backends.hpp"
#include "tgseg/common.hpp"

namespace tgseg {

struct SyntheticScene {
    std::string id;
    Image image;
    BinaryMask gt;
    std::string fore_keyword;
    std::string back_keyword;
    bool has_distractor = false;
};

struct SceneOptions {
    int rows = 64;
    int cols = 64;
    std::uint64_t seed = 7;
};

SyntheticScene make_scene(const MockEncoder& encoder, int index, const SceneOptions& opts = {});

std::vector<SyntheticScene> make_scenes(const MockEncoder& encoder, int count, const SceneOptions& opts = {});

// Caption/QA fixture answering every chain of every scene.
nlohmann::json make_fixture(const std::vector<SyntheticScene>& scenes);

} // namespace tgseg
