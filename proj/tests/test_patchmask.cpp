#include <cmath>
#include <vector>

#include "ctgfm/patch.hpp"
#include "ctgfm/rng.hpp"
#include "doctest.h"

using namespace ctgfm;
using namespace ctgfm::patch;

namespace {

std::vector<double> iota_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<double>(i);
    return w;
}

// the mask rules, restated independently of the sampler
void check_legal(const MaskPattern& mask, std::size_t n) {
    REQUIRE(mask.masked.size() == n);
    CHECK_FALSE(mask.masked.front());
    CHECK_FALSE(mask.masked.back());

    std::size_t run = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        if (i < n && mask.masked[i]) {
            ++run;
        } else {
            if (run > 0) CHECK(run >= 2);
            run = 0;
        }
    }

    const auto target = static_cast<long>(
        std::llround(mask.ratio_target * static_cast<double>(n - 2)));
    const long count = static_cast<long>(mask.count());
    CHECK(std::abs(count - target) <= 1);
}

}  // namespace

TEST_CASE("patch count formula") {
    CHECK(patch_count(1800, 48, 24) == 74);
    CHECK(patch_count(48, 48, 24) == 1);
    CHECK(patch_count(100, 20, 10) == 9);
    CHECK(patch_count(24, 4, 4) == 6);
    CHECK_THROWS(patch_count(40, 48, 24));
    CHECK_THROWS(patch_count(100, 20, 0));
}

TEST_CASE("patchify copies strided slices") {
    const auto w = iota_window(100);
    const PatchSequence seq = patchify(w, 20, 10, Channel::fhr, 400);
    CHECK(seq.n_patches() == 9);
    CHECK(seq.patch_len == 20);
    CHECK(seq.stride == 10);
    CHECK(seq.channel == Channel::fhr);
    CHECK(seq.source_window_start == 400);
    for (std::size_t k = 0; k < 9; ++k) {
        for (std::size_t j = 0; j < 20; ++j) {
            CHECK(seq.patches.at(k, j) == static_cast<double>(k * 10 + j));
        }
    }
}

TEST_CASE("non-overlapping patchify tiles the window") {
    const auto w = iota_window(24);
    const PatchSequence seq = patchify(w, 4, 4, Channel::uc);
    CHECK(seq.n_patches() == 6);
    CHECK(seq.patches.at(5, 3) == 23.0);
}

TEST_CASE("mask legality holds across sizes and ratios") {
    Rng rng(1234);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 4 + rng.integer(197);  // 4..200
        const double ratio = rng.uniform(0.1, 0.6);
        const MaskPattern mask = generate_mask(n, ratio, rng);
        check_legal(mask, n);
    }
}

TEST_CASE("four patches at ratio one half mask exactly the interior") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const MaskPattern mask = generate_mask(4, 0.5, rng);
        CHECK(mask.masked == std::vector<bool>{false, true, true, false});
    }
}

TEST_CASE("mask generation is deterministic per generator state") {
    Rng a(77), b(77);
    for (int trial = 0; trial < 20; ++trial) {
        const MaskPattern ma = generate_mask(74, 0.4, a);
        const MaskPattern mb = generate_mask(74, 0.4, b);
        CHECK(ma.masked == mb.masked);
    }
}

TEST_CASE("different draws give different masks") {
    Rng rng(5);
    const MaskPattern m1 = generate_mask(74, 0.4, rng);
    const MaskPattern m2 = generate_mask(74, 0.4, rng);
    CHECK(m1.masked != m2.masked);
}

TEST_CASE("mask preconditions") {
    Rng rng(1);
    CHECK_THROWS(generate_mask(3, 0.4, rng));
    CHECK_THROWS(generate_mask(74, 0.0, rng));
    CHECK_THROWS(generate_mask(74, 1.0, rng));
}

TEST_CASE("count matches the stored mask") {
    Rng rng(15);
    const MaskPattern mask = generate_mask(50, 0.3, rng);
    std::size_t manual = 0;
    for (bool b : mask.masked) manual += b ? 1 : 0;
    CHECK(mask.count() == manual);
}

TEST_CASE("apply_mask zeroes only the masked FHR patches") {
    const auto w = iota_window(24);
    PatchSequence fhr = patchify(w, 4, 4, Channel::fhr);
    PatchSequence uc = patchify(w, 4, 4, Channel::uc);
    for (std::size_t k = 0; k < uc.patches.size(); ++k) uc.patches[k] += 1000.0;

    MaskPattern mask;
    mask.masked = {false, true, true, false, false, false};
    mask.ratio_target = 0.5;

    const auto [masked_fhr, kept_uc] = apply_mask(fhr, uc, mask);
    for (std::size_t k = 0; k < 6; ++k) {
        for (std::size_t j = 0; j < 4; ++j) {
            if (k == 1 || k == 2) {
                CHECK(masked_fhr.patches.at(k, j) == 0.0);
            } else {
                CHECK(masked_fhr.patches.at(k, j) == fhr.patches.at(k, j));
            }
            CHECK(kept_uc.patches.at(k, j) == uc.patches.at(k, j));
        }
    }
}

TEST_CASE("apply_mask validates sequence agreement") {
    const auto w = iota_window(24);
    const PatchSequence fhr = patchify(w, 4, 4, Channel::fhr);
    const PatchSequence short_uc = patchify(iota_window(20), 4, 4, Channel::uc);
    MaskPattern mask;
    mask.masked = std::vector<bool>(6, false);
    CHECK_THROWS(apply_mask(fhr, short_uc, mask));

    const PatchSequence uc = patchify(w, 4, 4, Channel::uc);
    mask.masked = std::vector<bool>(5, false);
    CHECK_THROWS(apply_mask(fhr, uc, mask));
}
