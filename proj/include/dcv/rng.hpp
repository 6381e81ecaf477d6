#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dcv {

// Splittable random stream. Each stream is identified by a key path
// (root seed followed by fork ids); the engine is seeded from the whole path
// through std::seed_seq, so forked substreams never share state with their
// parent or siblings.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : key_{seed} { reseed(); }

    // Child stream for `stream_id`. Does not advance this stream.
    Rng fork(std::uint64_t stream_id) const {
        Rng child(*this, stream_id);
        return child;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    result_type operator()() { return engine_(); }
    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }

    const std::vector<std::uint64_t>& key() const { return key_; }

private:
    Rng(const Rng& parent, std::uint64_t stream_id) : key_(parent.key_) {
        key_.push_back(stream_id);
        reseed();
    }

    void reseed() {
        std::vector<std::uint32_t> words;
        words.reserve(2 * key_.size() + 1);
        words.push_back(static_cast<std::uint32_t>(key_.size()));
        for (auto k : key_) {
            words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
            words.push_back(static_cast<std::uint32_t>(k >> 32));
        }
        std::seed_seq seq(words.begin(), words.end());
        engine_.seed(seq);
    }

    std::vector<std::uint64_t> key_;
    std::mt19937_64 engine_;
};

}  // namespace dcv
