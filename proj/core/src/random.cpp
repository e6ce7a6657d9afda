#include "sapsim/random.hpp"

#include <cmath>
#include <numbers>

#include "sapsim/hilbert.hpp"

namespace sapsim {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

inline double to_unit_open_closed(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

NormalStream::NormalStream(StreamKey key) {
    if (key.path > 0xFFFFFFFFull || key.step > 0xFFFFFFFFull) {
        throw InvalidInput("stream path and step indices must fit in 32 bits");
    }
    key_ = {static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)};
    counter_ = {0u, static_cast<std::uint32_t>(key.step), static_cast<std::uint32_t>(key.path),
                static_cast<std::uint32_t>(key.purpose)};
}

void NormalStream::refill() noexcept {
    raw_ = philox4x32(counter_, key_);
    ++counter_[0];
    raw_used_ = 0;
}

double NormalStream::next_uniform() noexcept {
    if (raw_used_ > 2) refill();
    const double u = to_unit_open_closed(raw_[raw_used_], raw_[raw_used_ + 1]);
    raw_used_ += 2;
    return u;
}

double NormalStream::next() noexcept {
    if (cached_count_ > 0) {
        return cached_[--cached_count_];
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_[0] = r * std::sin(theta);
    cached_count_ = 1;
    return r * std::cos(theta);
}

void NormalStream::fill(std::span<double> out) noexcept {
    for (double& x : out) x = next();
}

}  // namespace sapsim
