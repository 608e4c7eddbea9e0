#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "unicoal/common.hpp"

namespace unicoal {

// Deterministic counter-free PRNG (xoshiro256** with splitmix64 seeding).
// Every consumer draws from a named stream derived from the master seed,
// so adding a consumer never perturbs the draws of another.
class RandomStream {
public:
    RandomStream() : RandomStream(0, "default") {}

    RandomStream(uint64_t master_seed, const std::string& name) {
        uint64_t h = 1469598103934665603ull; // FNV-1a over the stream name
        for (unsigned char c : name) {
            h ^= c;
            h *= 1099511628211ull;
        }
        uint64_t x = master_seed ^ h;
        for (auto& si : s_) si = splitmix64(x);
        have_gauss_ = false;
        gauss_ = 0.0;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    uint64_t next_below(uint64_t n) {
        check(n > 0, "next_below: empty range");
        // Rejection sampling keeps the draw unbiased.
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Marsaglia polar method (cached pair).
    double gaussian() {
        if (have_gauss_) {
            have_gauss_ = false;
            return gauss_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_double() - 1.0;
            v = 2.0 * next_double() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        gauss_ = v * m;
        have_gauss_ = true;
        return u * m;
    }

    // Serialized state: 4 words of xoshiro state plus the gaussian cache.
    std::vector<uint64_t> state() const {
        std::vector<uint64_t> st(s_, s_ + 4);
        st.push_back(have_gauss_ ? 1 : 0);
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(gauss_));
        std::memcpy(&bits, &gauss_, sizeof(bits));
        st.push_back(bits);
        return st;
    }

    void set_state(const std::vector<uint64_t>& st) {
        check(st.size() == 6, "RandomStream: bad state size");
        for (int i = 0; i < 4; ++i) s_[i] = st[size_t(i)];
        have_gauss_ = st[4] != 0;
        std::memcpy(&gauss_, &st[5], sizeof(gauss_));
    }

private:
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
    bool have_gauss_;
    double gauss_;
};

} // namespace unicoal
