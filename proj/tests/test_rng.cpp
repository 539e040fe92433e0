#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "ctgfm/rng.hpp"
#include "doctest.h"

using ctgfm::Rng;
using ctgfm::derive_seed;

TEST_CASE("identical seeds reproduce the stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.uniform() == b.uniform());
        CHECK(a.integer(97) == b.integer(97));
        CHECK(a.normal() == b.normal());
    }
}

TEST_CASE("different seeds give different streams") {
    Rng a(1), b(2);
    int diff = 0;
    for (int i = 0; i < 100; ++i) {
        if (a.uniform() != b.uniform()) ++diff;
    }
    CHECK(diff > 90);
}

TEST_CASE("uniform stays in [0,1) and fills the range") {
    Rng rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.001);
    CHECK(hi > 0.999);
}

TEST_CASE("bounded uniform respects its interval") {
    Rng rng(9);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform(-3.0, 5.0);
        CHECK(u >= -3.0);
        CHECK(u < 5.0);
    }
}

TEST_CASE("integer covers [0,n) roughly evenly") {
    Rng rng(11);
    std::vector<int> counts(10, 0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ++counts[rng.integer(10)];
    for (int c : counts) {
        CHECK(c > draws / 10 - 600);
        CHECK(c < draws / 10 + 600);
    }
}

TEST_CASE("integer with n=1 always returns 0") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) CHECK(rng.integer(1) == 0);
}

TEST_CASE("normal moments") {
    Rng rng(13);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("shuffle is a permutation and seed-stable") {
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    std::vector<int> w = v;
    Rng a(21), b(21);
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("derive_seed separates labels and indices") {
    std::set<std::uint64_t> seen;
    seen.insert(derive_seed(5, "alpha"));
    seen.insert(derive_seed(5, "beta"));
    seen.insert(derive_seed(6, "alpha"));
    seen.insert(derive_seed(5, "alpha", 1));
    seen.insert(derive_seed(5, "alpha", 0, 1));
    seen.insert(derive_seed(5, "alpha", 2, 3));
    CHECK(seen.size() == 6);
    CHECK(derive_seed(5, "alpha", 1, 2) == derive_seed(5, "alpha", 1, 2));
}

TEST_CASE("bernoulli extremes") {
    Rng rng(31);
    for (int i = 0; i < 100; ++i) CHECK_FALSE(rng.bernoulli(0.0));
    int hits = 0;
    for (int i = 0; i < 10000; ++i) hits += rng.bernoulli(0.25) ? 1 : 0;
    CHECK(hits > 2200);
    CHECK(hits < 2800);
}
