#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "vnlnet/video.hpp"

namespace vnl::testing {

inline Video random_video(int T, int C, int H, int W, std::uint32_t seed, float lo = 0.f,
                          float hi = 255.f)
{
    std::mt19937 gen(seed);
    std::uniform_real_distribution<float> dist(lo, hi);
    Video v(T, C, H, W);
    for (float& x : v.data())
        x = dist(gen);
    return v;
}

inline Video random_integer_video(int T, int C, int H, int W, std::uint32_t seed)
{
    std::mt19937 gen(seed);
    std::uniform_int_distribution<int> dist(0, 255);
    Video v(T, C, H, W);
    for (float& x : v.data())
        x = static_cast<float>(dist(gen));
    return v;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("vnlnet_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace vnl::testing
