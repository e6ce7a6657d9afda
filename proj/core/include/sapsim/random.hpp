#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, path, step, purpose, position), so sample paths can be produced in
// any order and on any number of threads with identical results.

#include <array>
#include <cstdint>
#include <span>

namespace sapsim {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3").
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Separates independent uses of the same (seed, path, step) coordinates.
enum class StreamPurpose : std::uint32_t {
    wiener = 1,
    probe = 2,
    auxiliary = 3,
};

struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t path = 0;
    std::uint64_t step = 0;
    StreamPurpose purpose = StreamPurpose::wiener;
};

/// Sequence of standard normals for one stream key (Box-Muller over Philox
/// output). Path and step indices must fit in 32 bits.
class NormalStream {
public:
    explicit NormalStream(StreamKey key);

    double next() noexcept;
    void fill(std::span<double> out) noexcept;

    /// Uniform on (0, 1].
    double next_uniform() noexcept;

private:
    void refill() noexcept;

    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 2> key_{};
    std::array<double, 2> cached_{};
    int cached_count_ = 0;
    std::array<std::uint32_t, 4> raw_{};
    int raw_used_ = 4;
};

}  // namespace sapsim
