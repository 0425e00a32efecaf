#include "structadapt/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace structadapt {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

std::uint64_t splitmix64(std::uint64_t& state)
{
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key)
{
  for (int round = 0; round < 10; ++round) {
    std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    auto lo0 = static_cast<std::uint32_t>(p0);
    auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

double normal_at(std::uint64_t seed, std::uint64_t index)
{
  auto w = philox4x32({static_cast<std::uint32_t>(index),
                       static_cast<std::uint32_t>(index >> 32), 0u, 0u},
                      {static_cast<std::uint32_t>(seed),
                       static_cast<std::uint32_t>(seed >> 32)});
  std::uint64_t a = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  std::uint64_t b = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
  constexpr double scale = 1.0 / 9007199254740992.0;
  double u1 = static_cast<double>((a >> 11) + 1) * scale;
  double u2 = static_cast<double>(b >> 11) * scale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label)
{
  std::uint64_t state = master;
  std::uint64_t out = splitmix64(state);
  for (unsigned char c : label) {
    state ^= out + c;
    out = splitmix64(state);
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b)
{
  std::uint64_t state = master;
  splitmix64(state);
  state ^= a;
  std::uint64_t out = splitmix64(state);
  state ^= b;
  out ^= splitmix64(state);
  return out;
}

Field draw_noise(const GridSpec& grid, std::uint64_t seed)
{
  Field f(grid);
  auto v = f.values();
  for (std::size_t j = 0; j < v.size(); ++j)
    v[j] = normal_at(seed, j);
  return f;
}

Field Observation::data() const
{
  Field y = signal;
  if (eps != 0.0) {
    double scale = eps / std::sqrt(signal.grid().cell_volume());
    auto out = y.values();
    auto xi = noise.values();
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] += scale * xi[j];
  }
  return y;
}

Observation make_observation(Field signal, double eps, std::uint64_t seed)
{
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::invalid_argument("noise level must satisfy 0 <= eps < 1");
  Observation obs;
  obs.noise = draw_noise(signal.grid(), seed);
  obs.signal = std::move(signal);
  obs.eps = eps;
  obs.seed = seed;
  return obs;
}

} // namespace structadapt
