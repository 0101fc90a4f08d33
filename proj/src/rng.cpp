#include "csbp/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace csbp {

std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Rng::result_type Rng::operator()()
{
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
}

double Rng::uniform()
{
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal()
{
    // Box-Muller, one variate per call so the stream position is predictable.
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::exponential(double rate)
{
    return -std::log(uniform()) / rate;
}

long Rng::poisson(double mean)
{
    if (mean <= 0.0)
        return 0;
    std::poisson_distribution<long> dist(mean);
    return dist(*this);
}

Rng Rng::substream(std::uint64_t id) const
{
    return Rng(mix64(key_ ^ mix64(id + 0x632be59bd9b4e019ULL)));
}

Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids)
{
    std::uint64_t k = mix64(seed + 0x243f6a8885a308d3ULL);
    for (auto id : ids)
        k = mix64(k ^ mix64(id + 0x13198a2e03707344ULL));
    return Rng(k);
}

}  // namespace csbp
