#include "tgseg/image_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace tgseg {

namespace fs = std::filesystem;

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

void write_mat(const fs::path& path, const cv::Mat& m) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), m)) throw IoError("cannot write " + path.string());
}

bool is_image_file(const fs::path& p) {
    static const std::set<std::string> exts = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"};
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return exts.count(e) > 0;
}

std::map<std::string, fs::path> files_by_stem(const fs::path& dir) {
    std::map<std::string, fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
        const std::string stem = entry.path().stem().string();
        if (!out.emplace(stem, entry.path()).second)
            throw IoError("two files share the stem '" + stem + "' in " + dir.string());
    }
    return out;
}

std::string dataset_name(const fs::path& root) {
    fs::path p = fs::absolute(root).lexically_normal();
    if (p.filename().empty()) p = p.parent_path();
    return p.filename().string();
}

} // namespace

Image read_image(const fs::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (m.empty()) throw IoError("cannot read image " + path.string());
    cv::cvtColor(m, m, cv::COLOR_BGR2RGB);
    Image img(m.rows, m.cols, 3);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < m.cols; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = row[x][c] / 255.0;
    }
    return img;
}

void write_image(const fs::path& path, const Image& image) {
    require(image.channels == 1 || image.channels == 3, "write_image: need 1 or 3 channels");
    cv::Mat m(image.height, image.width, image.channels == 3 ? CV_8UC3 : CV_8UC1);
    for (int y = 0; y < image.height; ++y) {
        auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < image.channels; ++c) {
                // OpenCV stores BGR.
                const int src = image.channels == 3 ? 2 - c : 0;
                row[x * image.channels + c] = to_byte(image.at(y, x, src));
            }
    }
    write_mat(path, m);
}

BinaryMask read_mask(const fs::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw IoError("cannot read mask " + path.string());
    BinaryMask mask(m.rows, m.cols, 0);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) mask(y, x) = row[x] >= 128 ? 1 : 0;
    }
    return mask;
}

void write_mask(const fs::path& path, const BinaryMask& mask) {
    require(!mask.empty(), "write_mask: empty mask");
    cv::Mat m(mask.rows, mask.cols, CV_8UC1);
    for (int y = 0; y < mask.rows; ++y)
        for (int x = 0; x < mask.cols; ++x) m.at<std::uint8_t>(y, x) = mask(y, x) ? 255 : 0;
    write_mat(path, m);
}

void write_heatmap(const fs::path& path, const RealGrid& heat) {
    require(!heat.empty(), "write_heatmap: empty heatmap");
    cv::Mat m(heat.rows, heat.cols, CV_8UC1);
    for (int y = 0; y < heat.rows; ++y)
        for (int x = 0; x < heat.cols; ++x) m.at<std::uint8_t>(y, x) = to_byte(heat(y, x));
    write_mat(path, m);
}

DatasetSpec find_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) throw IoError("dataset root does not exist: " + root.string());
    static const std::array<std::pair<const char*, const char*>, 4> layouts = {{
        {"images", "masks"},
        {"Imgs", "GT"},
        {"Image", "GT_Object"},
        {"ShadowImages", "ShadowMasks"},
    }};
    for (const auto& [img, gt] : layouts) {
        if (fs::is_directory(root / img) && fs::is_directory(root / gt))
            return {dataset_name(root), root / img, root / gt};
    }
    throw IoError("no image/mask directory pair found under " + root.string());
}

std::vector<Sample> list_samples(const DatasetSpec& spec) {
    if (!fs::is_directory(spec.image_dir)) throw IoError("image directory missing: " + spec.image_dir.string());
    if (!fs::is_directory(spec.mask_dir)) throw IoError("mask directory missing: " + spec.mask_dir.string());
    const auto images = files_by_stem(spec.image_dir);
    const auto masks = files_by_stem(spec.mask_dir);
    std::vector<Sample> out;
    for (const auto& [stem, path] : images) {
        auto it = masks.find(stem);
        if (it == masks.end()) throw IoError("no mask for image '" + stem + "'");
        out.push_back({stem, path, it->second});
    }
    return out;
}

} // namespace tgseg
