#pragma once

#include "structadapt/grid.hpp"

#include <array>
#include <cstdint>
#include <string_view>

namespace structadapt {

//! Philox4x32-10 block: 4 x 32-bit counter, 2 x 32-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

//! Standard normal variate for (seed, index).
//!
//! counter = (index lo, index hi, 0, 0), key = (seed lo, seed hi). The four
//! output words give two 53-bit uniforms
//!   u1 = ((w0 << 32 | w1) >> 11 + 1) * 2^-53   in (0, 1]
//!   u2 = ((w2 << 32 | w3) >> 11) * 2^-53       in [0, 1)
//! and z = sqrt(-2 ln u1) cos(2 pi u2).
double normal_at(std::uint64_t seed, std::uint64_t index);

//! Child seed for a labelled sub-stream (splitmix64 over the label bytes).
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

//! Field of iid N(0, 1) draws, node j gets normal_at(seed, j).
Field draw_noise(const GridSpec& grid, std::uint64_t seed);

//! One realization of the discretized experiment Y = F dt + eps W(dt).
struct Observation
{
  Field signal;
  Field noise;
  double eps = 0.0;
  std::uint64_t seed = 0;

  //! Data field y_j = F(t_j) + eps * dx^(-d/2) * xi_j, so that
  //! sum_j K(t_j - x) y_j dx^d carries noise eps * sum_j K dx^(d/2) xi_j.
  Field data() const;
};

//! Throws std::invalid_argument unless 0 <= eps < 1.
Observation make_observation(Field signal, double eps, std::uint64_t seed);

} // namespace structadapt
