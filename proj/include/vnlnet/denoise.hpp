#pragma once

#include "vnlnet/network.hpp"
#include "vnlnet/nl_features.hpp"
#include "vnlnet/patch_search.hpp"

namespace vnl {

/// Network input for one frame of the features: 1 x (n*C) x H x W.
Tensor4<float> feature_frame(const NlFeatures& f, int t);

/// One frame of a video as a 1 x C x H x W tensor.
Tensor4<float> video_frame(const Video& v, int t);

/// Throws if the network input width differs from what `cfg` produces on a
/// video with `color_channels` channels.
void check_network_matches(const NetworkConfig& net, const SearchConfig& cfg, int color_channels);

/// Frame-by-frame denoising of frames [opts.frame_begin, opts.frame_end):
/// patch search, feature gathering, residual prediction (inference mode),
/// noisy - residual. No-patch networks get the noisy frame directly.
/// The result holds only the processed frames and is not clamped.
Video denoise(const Video& noisy, Network<float>& net, const SearchConfig& cfg,
              const SearchOptions& opts = {});

/// Non-Local Pixel Mean of the processed frames.
Video nl_mean_denoise(const Video& noisy, const SearchConfig& cfg, const SearchOptions& opts = {});

}  // namespace vnl
