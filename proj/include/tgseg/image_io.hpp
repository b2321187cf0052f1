#pragma once

// Image files and dataset layouts.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tgseg/common.hpp"

namespace tgseg {

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// RGB in [0, 1]; grayscale files are replicated to three channels.
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& image);

// Binarized at mid-gray (>= 128).
BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask); // 0 / 255
void write_heatmap(const std::filesystem::path& path, const RealGrid& heat); // round(255 * h)

struct DatasetSpec {
    std::string name;
    std::filesystem::path image_dir;
    std::filesystem::path mask_dir;
};

struct Sample {
    std::string stem;
    std::filesystem::path image_path;
    std::filesystem::path mask_path;
};

// Looks for a known image/mask directory pair under root:
// images/masks, Imgs/GT, Image/GT_Object, ShadowImages/ShadowMasks.
DatasetSpec find_dataset(const std::filesystem::path& root);

// Images paired with masks by filename stem, sorted by stem. Every image
// needs exactly one mask.
std::vector<Sample> list_samples(const DatasetSpec& spec);

} // namespace tgseg
