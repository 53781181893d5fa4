#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace microball {

// Philox4x64-10 (Salmon et al., Random123). A pure function of (counter, key),
// so every draw can be addressed directly by (seed, replica, shell, index).
struct Philox4x64 {
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;
    static Counter generate(Counter ctr, Key key);
};

// [0, 1) with 53 random bits.
inline double u01(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }
// (0, 1].
inline double u01_open_low(std::uint64_t x) { return static_cast<double>((x >> 11) + 1) * 0x1.0p-53; }

// Uniform random bit generator walking word 3 of a fixed counter. Used where
// a variable number of draws is needed (Poisson counts).
class CounterStream {
public:
    using result_type = std::uint64_t;

    CounterStream(Philox4x64::Key key, Philox4x64::Counter base) : key_(key), ctr_(base) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (pos_ == 4) {
            buf_ = Philox4x64::generate(ctr_, key_);
            ++ctr_[3];
            pos_ = 0;
        }
        return buf_[pos_++];
    }

private:
    Philox4x64::Key key_;
    Philox4x64::Counter ctr_;
    Philox4x64::Counter buf_{};
    int pos_ = 4;
};

}  // namespace microball
