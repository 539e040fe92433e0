#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ctgfm/rng.hpp"
#include "ctgfm/tensor.hpp"

namespace ctgfm::patch {

enum class Channel { fhr, uc };

// A window tokenized into N patches of patch_len samples taken every stride
// samples: patch k holds source samples [k*stride, k*stride + patch_len).
struct PatchSequence {
    Channel channel = Channel::fhr;
    nn::Tensor patches;  // N x patch_len
    std::size_t patch_len = 0;
    std::size_t stride = 0;
    std::size_t source_window_start = 0;

    std::size_t n_patches() const { return patches.rows(); }
};

// Which patches of a sequence are hidden for masked pretraining. Boundary
// patches stay visible, masked runs are at least 2 long, and the realized
// count is within one of round(ratio_target * (N - 2)).
struct MaskPattern {
    std::vector<bool> masked;
    double ratio_target = 0.0;

    std::size_t count() const;
};

std::size_t patch_count(std::size_t window_len, std::size_t patch_len,
                        std::size_t stride);

PatchSequence patchify(const std::vector<double>& window, std::size_t patch_len,
                       std::size_t stride, Channel channel,
                       std::size_t source_window_start = 0);

// Draws a legal mask by placing contiguous blocks of length 2-4 uniformly
// over free interior positions until the count reaches the target.
// Deterministic for a fixed generator state. n_patches must be >= 4.
MaskPattern generate_mask(std::size_t n_patches, double ratio, Rng& rng);

// Zeroes the FHR patches selected by the mask; the UC sequence passes
// through untouched.
std::pair<PatchSequence, PatchSequence> apply_mask(const PatchSequence& fhr,
                                                   const PatchSequence& uc,
                                                   const MaskPattern& mask);

}  // namespace ctgfm::patch
