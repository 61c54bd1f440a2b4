#pragma once

#include <cstdint>
#include <vector>

#include "vnlnet/video.hpp"

namespace vnl {

/// Procedural clip: a smooth random texture with a few flat-shaded shapes,
/// either static or translated by a fixed integer velocity per frame.
struct ClipSpec {
    int frames = 16;
    int rows = 64;
    int cols = 64;
    int channels = 1;
    int velocity_x = 0;  // pixels per frame
    int velocity_y = 0;
    std::uint64_t seed = 0;
};

Video make_clip(const ClipSpec& spec);

/// `count` clips; roughly `moving_fraction` of them translate with a random
/// non-zero velocity (components in [-2, 2] pixels per frame), the rest are
/// static.
std::vector<Video> make_corpus(int count, int frames, int rows, int cols, int channels,
                               double moving_fraction, std::uint64_t seed);

}  // namespace vnl
