#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tgseg {

// Raised when a caller breaks a documented precondition (shapes, ranges, ordering).
class ContractViolation : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// A feature vector with (near) zero norm reached a cosine computation.
class DegenerateFeature : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// A model backend failed. Callers may retry the same request.
class BackendError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ContractViolation(what);
}

// Dense row-major 2-D grid.
template <class T>
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int r, int c, T fill = T{}) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
        require(r >= 0 && c >= 0, "Grid: negative extent");
    }

    T& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    const T& operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    bool same_shape(const Grid& o) const { return rows == o.rows && cols == o.cols; }

    friend bool operator==(const Grid&, const Grid&) = default;
};

using RealGrid = Grid<double>;

// Binary mask, values strictly 0 or 1.
using BinaryMask = Grid<std::uint8_t>;

// Interleaved H x W x C image with channel values in [0, 1].
struct Image {
    int height = 0;
    int width = 0;
    int channels = 3;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {
        require(h > 0 && w > 0 && c > 0, "Image: extents must be positive");
    }

    double& at(int y, int x, int ch) { return data[(static_cast<std::size_t>(y) * width + x) * channels + ch]; }
    double at(int y, int x, int ch) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + ch];
    }

    friend bool operator==(const Image&, const Image&) = default;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

// Pixel-edge box: covers columns [x0, x1) and rows [y0, y1).
struct Box {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int area() const { return (x1 - x0) * (y1 - y0); }
    friend bool operator==(const Box&, const Box&) = default;
};

// 64-bit FNV-1a over raw bytes; used for image digests in traces.
std::uint64_t fnv1a64(const void* bytes, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t digest(const Image& img);

} // namespace tgseg
