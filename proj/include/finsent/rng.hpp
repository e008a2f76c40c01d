#pragma once

#include <cstdint>
#include <vector>

namespace finsent {

// Deterministic random stream for one run (xoshiro256** seeded through
// splitmix64). Every stochastic step in the library draws from one RunRng
// in a fixed, documented order:
//
//   1. parameter initialization, in parameter registration order
//   2. validation split selection (when enabled)
//   3. per epoch: shuffle of instance order, then per instance the dropout
//      masks in forward order (one mask per fused token vector, then one
//      for the sentence vector)
//
// Identical seeds therefore give bit-identical runs; no std::random
// distribution is used so the stream does not depend on the standard
// library implementation.
class RunRng {
public:
    explicit RunRng(std::uint64_t seed) {
        // splitmix64 expansion of the seed into the xoshiro state
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_uniform();
    }

    // uniform in [0, n); n must be > 0
    std::size_t next_index(std::size_t n) {
        return static_cast<std::size_t>(next_u64() % n);
    }

    bool next_bernoulli(double p) { return next_uniform() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        // Fisher-Yates
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = next_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

}  // namespace finsent
