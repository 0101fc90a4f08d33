#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace csbp {

// Counter-based generator: the n-th output is a SplitMix64 finalizer applied to
// key + n * golden. Streams are identified by keys derived from (seed, ids...),
// so results never depend on which worker consumes which stream.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t key = 0) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();
    // Uniform on the open interval (0, 1).
    double uniform();
    double normal();
    double exponential(double rate);
    long poisson(double mean);

    Rng substream(std::uint64_t id) const;
    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);
Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids);

// Stream labels used across the toolkit.
enum StreamTag : std::uint64_t {
    kPastTag = 0x5041535400000001ULL,
    kFutureTag = 0x4655545500000002ULL,
    kGaussTag = 0x4741555300000003ULL,
    kJumpTag = 0x4a554d5000000004ULL,
    kBridgeTag = 0x4252494400000005ULL,
    kTrialTag = 0x545249410000000aULL,
    kMassTag = 0x4d41535300000006ULL,
};

}  // namespace csbp
