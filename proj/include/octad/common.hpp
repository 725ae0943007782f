#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace octad {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Hashing / seed derivation

constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr uint64_t kFnvPrime = 0x100000001b3ull;

inline uint64_t fnv1a64(std::string_view s, uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Deterministic RNG (xoshiro256++). std::mt19937 distributions are not
// bit-specified across standard libraries, so all draws go through this.

class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    uint64_t next() {
        auto rotl = [](uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // [0, 1)
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // [0, n)
    int uniform_int(int n) {
        if (n <= 0) throw Error("uniform_int: n must be positive");
        int v = static_cast<int>(u01() * n);
        return v < n ? v : n - 1;
    }

    double normal(double mu = 0.0, double sigma = 1.0) {
        // Box-Muller, fresh pair per call; u1 in (0,1] avoids log(0).
        double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = u01();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(2.0 * M_PI * u2);
    }

private:
    std::array<uint64_t, 4> state_{};
};

// Sub-stream derivation: every consumer of randomness gets its own stream
// keyed by (master seed, purpose string, indices). Schedule-independent.
inline uint64_t derive_seed(uint64_t seed, std::string_view purpose,
                            uint64_t a = 0, uint64_t b = 0) {
    uint64_t s = seed ^ fnv1a64(purpose);
    splitmix64(s);
    s += a * 0x9e3779b97f4a7c15ull;
    splitmix64(s);
    s += b * 0xd1b54a32d192ed03ull;
    return splitmix64(s);
}

inline Rng derive_rng(uint64_t seed, std::string_view purpose,
                      uint64_t a = 0, uint64_t b = 0) {
    return Rng(derive_seed(seed, purpose, a, b));
}

// ---------------------------------------------------------------------------
// Grayscale image, intensities in [0,1], row-major.

struct Image {
    int h = 0;
    int w = 0;
    std::vector<float> pix;

    Image() = default;
    Image(int h_, int w_, float fill = 0.f) : h(h_), w(w_), pix(size_t(h_) * w_, fill) {}

    float& at(int r, int c) { return pix[size_t(r) * w + c]; }
    float at(int r, int c) const { return pix[size_t(r) * w + c]; }
    size_t size() const { return pix.size(); }

    bool same_shape(const Image& o) const { return h == o.h && w == o.w; }

    double mean() const {
        double s = 0;
        for (float v : pix) s += v;
        return pix.empty() ? 0.0 : s / pix.size();
    }

    void clamp01() {
        for (float& v : pix) v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
    }
};

inline double l1_distance(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw Error("l1_distance: shape mismatch");
    double s = 0;
    for (size_t i = 0; i < a.pix.size(); ++i) s += std::abs(double(a.pix[i]) - b.pix[i]);
    return a.pix.empty() ? 0.0 : s / a.pix.size();
}

inline bool bit_identical(const Image& a, const Image& b) {
    return a.h == b.h && a.w == b.w && a.pix == b.pix;
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

}  // namespace octad
