#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace structadapt {

//! 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ull);

//! 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

//! %.17g, with "inf" for +infinity.
std::string exact_number(double v);

} // namespace structadapt
