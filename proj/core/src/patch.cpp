#include "ctgfm/patch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ctgfm::patch {

std::size_t MaskPattern::count() const {
    return static_cast<std::size_t>(std::count(masked.begin(), masked.end(), true));
}

std::size_t patch_count(std::size_t window_len, std::size_t patch_len,
                        std::size_t stride) {
    if (stride == 0) throw std::invalid_argument("patch_count: stride must be >= 1");
    if (window_len < patch_len) {
        throw std::invalid_argument("patch_count: window shorter than patch length");
    }
    return (window_len - patch_len) / stride + 1;
}

PatchSequence patchify(const std::vector<double>& window, std::size_t patch_len,
                       std::size_t stride, Channel channel,
                       std::size_t source_window_start) {
    if (patch_len == 0) throw std::invalid_argument("patchify: patch_len must be >= 1");
    const std::size_t n = patch_count(window.size(), patch_len, stride);

    PatchSequence seq;
    seq.channel = channel;
    seq.patch_len = patch_len;
    seq.stride = stride;
    seq.source_window_start = source_window_start;
    seq.patches = nn::Tensor({n, patch_len});
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < patch_len; ++j) {
            seq.patches.at(k, j) = window[k * stride + j];
        }
    }
    return seq;
}

MaskPattern generate_mask(std::size_t n_patches, double ratio, Rng& rng) {
    if (n_patches < 4) {
        throw std::invalid_argument("generate_mask: need at least 4 patches to mask a run of 2");
    }
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw std::invalid_argument("generate_mask: ratio must be in (0, 1)");
    }

    const std::size_t eligible = n_patches - 2;  // indices 1 .. n_patches-2
    const auto target =
        static_cast<std::size_t>(std::lround(ratio * static_cast<double>(eligible)));

    MaskPattern out;
    out.masked.assign(n_patches, false);
    out.ratio_target = ratio;

    std::size_t count = 0;
    while (count < target) {
        // Cap the block so the final count never exceeds target + 1.
        const std::size_t room = target + 1 - count;
        std::size_t max_len = std::min<std::size_t>(4, room);

        bool placed = false;
        for (std::size_t len = 2 + rng.integer(max_len - 1); len >= 2; --len) {
            std::vector<std::size_t> starts;
            for (std::size_t s = 1; s + len <= n_patches - 1; ++s) {
                bool free = true;
                for (std::size_t i = s; i < s + len && free; ++i) free = !out.masked[i];
                if (free) starts.push_back(s);
            }
            if (starts.empty()) continue;
            const std::size_t s = starts[rng.integer(starts.size())];
            for (std::size_t i = s; i < s + len; ++i) out.masked[i] = true;
            count += len;
            placed = true;
            break;
        }
        if (placed) continue;

        // Free space is fragmented into single gaps; extend an existing run
        // by one so every masked run stays >= 2 long.
        std::vector<std::size_t> extensions;
        for (std::size_t i = 1; i + 1 < n_patches; ++i) {
            if (out.masked[i]) continue;
            const bool next_to_run = (i > 1 && out.masked[i - 1]) ||
                                     (i + 2 < n_patches && out.masked[i + 1]);
            if (next_to_run) extensions.push_back(i);
        }
        if (extensions.empty()) break;  // every eligible index already masked
        out.masked[extensions[rng.integer(extensions.size())]] = true;
        ++count;
    }
    return out;
}

std::pair<PatchSequence, PatchSequence> apply_mask(const PatchSequence& fhr,
                                                   const PatchSequence& uc,
                                                   const MaskPattern& mask) {
    if (fhr.n_patches() != uc.n_patches()) {
        throw std::invalid_argument("apply_mask: channel patch counts differ");
    }
    if (mask.masked.size() != fhr.n_patches()) {
        throw std::invalid_argument("apply_mask: mask length does not match patch count");
    }
    PatchSequence masked_fhr = fhr;
    for (std::size_t k = 0; k < mask.masked.size(); ++k) {
        if (!mask.masked[k]) continue;
        for (std::size_t j = 0; j < masked_fhr.patch_len; ++j) {
            masked_fhr.patches.at(k, j) = 0.0;
        }
    }
    return {std::move(masked_fhr), uc};
}

}  // namespace ctgfm::patch
