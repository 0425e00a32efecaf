#include "structadapt/partition.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace structadapt {

std::vector<Partition> enumerate_partitions(int d)
{
  if (d < 1)
    throw std::invalid_argument("partition size must be >= 1");
  std::vector<Partition> out;
  std::vector<int> a(d, 0);
  while (true) {
    int nblocks = *std::max_element(a.begin(), a.end()) + 1;
    Partition p(nblocks);
    for (int i = 0; i < d; ++i)
      p[a[i]].push_back(i);
    out.push_back(std::move(p));

    // next restricted-growth string: a[0] = 0, a[i] <= 1 + max(a[0..i-1])
    int i = d - 1;
    for (; i > 0; --i) {
      int prefix_max = *std::max_element(a.begin(), a.begin() + i);
      if (a[i] <= prefix_max) {
        ++a[i];
        std::fill(a.begin() + i + 1, a.end(), 0);
        break;
      }
    }
    if (i == 0)
      break;
  }
  return out;
}

long long bell_number(int d)
{
  // Bell triangle
  std::vector<long long> row{1};
  for (int i = 1; i <= d; ++i) {
    std::vector<long long> next{row.back()};
    for (long long v : row)
      next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

bool is_partition_of(const Partition& p, int d)
{
  std::vector<int> seen(d, 0);
  for (const auto& b : p) {
    if (b.empty())
      return false;
    for (int j : b) {
      if (j < 0 || j >= d || seen[j]++)
        return false;
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
}

Partition canonical(Partition p)
{
  for (auto& b : p)
    std::sort(b.begin(), b.end());
  std::sort(p.begin(), p.end(), [](const Block& x, const Block& y) {
    return x.front() < y.front();
  });
  return p;
}

std::string to_string(const Partition& p)
{
  std::ostringstream os;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i)
      os << '|';
    for (std::size_t k = 0; k < p[i].size(); ++k)
      os << (k ? "." : "") << p[i][k] + 1;
  }
  return os.str();
}

Partition parse_partition(const std::string& text)
{
  Partition p;
  std::istringstream blocks(text);
  std::string block;
  while (std::getline(blocks, block, '|')) {
    Block b;
    std::istringstream items(block);
    std::string item;
    while (std::getline(items, item, '.')) {
      if (item.empty())
        throw std::invalid_argument("empty index in partition '" + text + "'");
      b.push_back(std::stoi(item) - 1);
    }
    if (b.empty())
      throw std::invalid_argument("empty block in partition '" + text + "'");
    p.push_back(std::move(b));
  }
  if (p.empty())
    throw std::invalid_argument("empty partition text");
  return canonical(std::move(p));
}

} // namespace structadapt
