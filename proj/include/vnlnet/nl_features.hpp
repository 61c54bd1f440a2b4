#pragma once

#include "vnlnet/patch_search.hpp"
#include "vnlnet/video.hpp"

namespace vnl {

/// Non-local feature images: for every pixel of the covered frames, the values
/// of the n matched centre pixels, match-major (all C channels of match 0,
/// then match 1, ...). Tensor dims: frame_count x (n*C) x H x W.
struct NlFeatures {
    Tensor4<float> values;
    int first_frame = 0;
    int neighbors = 0;
    int color_channels = 0;

    int channels() const { return values.c(); }
};

/// Gathers v at the positions of `m`. Values always come from v, whatever
/// guide was used for the distances.
NlFeatures gather_features(const Video& v, const MatchTable& m);

/// Per-pixel mean over the n matches: the Non-Local Pixel Mean baseline.
/// Returns a video with the covered frames only.
Video nl_pixel_mean(const NlFeatures& f);

}  // namespace vnl
