#pragma once

#include <string>
#include <vector>

namespace structadapt {

//! Zero-based coordinate indices of one block.
using Block = std::vector<int>;
//! Blocks sorted by their smallest element, each block sorted ascending.
using Partition = std::vector<Block>;

//! All set partitions of {0, .., d-1} in restricted-growth order
//! (the single block first, the all-singletons partition last).
std::vector<Partition> enumerate_partitions(int d);

//! Bell number B_d.
long long bell_number(int d);

//! True when the blocks are non-empty, disjoint and cover {0, .., d-1}.
bool is_partition_of(const Partition& p, int d);

//! Canonical form: blocks sorted internally and by first element.
Partition canonical(Partition p);

//! One-based text form, e.g. "1.2|3".
std::string to_string(const Partition& p);
Partition parse_partition(const std::string& text);

} // namespace structadapt
