#pragma once

#include <cstdint>

namespace bayescg {

// Deterministic pseudo-random generator built on the SplitMix64 mixing function.
// All samplers are implemented here rather than taken from <random> because the
// standard distributions are implementation-defined; with a fixed seed every
// stream of draws is identical across platforms and standard libraries.
//
// split(stream) derives an independent generator from the original seed and a
// stream index; the derived stream does not depend on how many draws were made,
// which gives replicate-level reproducibility under any thread scheduling.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double next_double();                    // uniform on [0, 1)
    double next_gaussian();                  // standard normal, Marsaglia polar
    double next_exponential(double rate);    // mean 1/rate
    double next_gamma(double shape, double rate);  // Marsaglia-Tsang

    Rng split(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_ = 0;
    std::uint64_t state_ = 0;
    double cached_gaussian_ = 0.0;
    bool has_cached_gaussian_ = false;
};

}  // namespace bayescg
