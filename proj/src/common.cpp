#include "tgseg/common.hpp"

namespace tgseg {

std::uint64_t fnv1a64(const void* bytes, std::size_t n, std::uint64_t seed) {
    auto p = static_cast<const unsigned char*>(bytes);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t digest(const Image& img) {
    const int dims[3] = {img.height, img.width, img.channels};
    std::uint64_t h = fnv1a64(dims, sizeof(dims));
    return fnv1a64(img.data.data(), img.data.size() * sizeof(double), h);
}

} // namespace tgseg
