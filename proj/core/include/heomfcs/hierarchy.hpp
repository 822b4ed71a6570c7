#ifndef HEOMFCS_HIERARCHY_HPP
#define HEOMFCS_HIERARCHY_HPP

#include <cstdint>
#include <vector>

#include "heomfcs/types.hpp"

namespace heomfcs {

// Number of set partitions of a weight-m set with multiplicities[q-1] blocks
// of size q (m = sum q * multiplicities[q-1]).  Exact for m <= 20.
double partition_coefficient(const std::vector<int>& multiplicities);

// All block-size multiplicity vectors with weight <= m_max, ordered by
// weight then lexicographically.  Entry 0 is the empty partition.
std::vector<std::vector<int>> partitions_up_to(int m_max);

struct HierarchyIndex {
  std::vector<int> n;  // per-slot occupation
  std::vector<int> m;  // block-size multiplicities, m[q-1] blocks of size q
};

// Truncated index space of the hierarchy: occupation multisets over the
// decomposition slots (level <= n_max) times derivative sectors (integer
// partitions of weight <= m_max).  The two factors are independent, so
// neighbor tables are stored once for the multiset factor and shared by all
// sectors.  Flat addressing is sector-major: flat = sector * n_count + off.
class IndexSpace {
 public:
  static IndexSpace enumerate(const std::vector<int>& terms_per_bath,
                              int n_max, int m_max);
  // uniform per-bath term count
  static IndexSpace enumerate(int n_baths, int n_terms, int n_max, int m_max);

  int slots() const { return slots_; }
  int truncation() const { return n_max_; }
  int derivative_order() const { return m_max_; }
  int n_count() const { return static_cast<int>(level_.size()); }
  int sector_count() const { return static_cast<int>(partitions_.size()); }
  long long total() const {
    return static_cast<long long>(n_count()) * sector_count();
  }

  const uint8_t* occupations(int off) const { return &occ_[size_t(off) * slots_]; }
  int level(int off) const { return level_[off]; }
  int raise_n(int off, int slot) const { return raise_[size_t(off) * slots_ + slot]; }
  int lower_n(int off, int slot) const { return lower_[size_t(off) * slots_ + slot]; }

  const std::vector<int>& partition(int sector) const { return partitions_[sector]; }
  int weight(int sector) const { return weight_[sector]; }
  int lower_m(int sector, int q) const { return lower_m_[size_t(sector) * m_max_ + (q - 1)]; }
  double sector_coefficient(int sector) const { return coeff_[sector]; }

  // Fingerprint of the full index layout; checkpoints refuse to load into a
  // differently-shaped space.
  uint64_t structure_hash() const;

  HierarchyIndex unpack(long long flat) const;
  long long pack(const HierarchyIndex& idx) const;  // -1 when absent

 private:
  int slots_ = 0, n_max_ = 0, m_max_ = 0;
  std::vector<int> terms_per_bath_;
  std::vector<uint8_t> occ_;
  std::vector<uint8_t> level_;
  std::vector<int32_t> raise_, lower_;
  std::vector<std::vector<int>> partitions_;
  std::vector<int> weight_;
  std::vector<int32_t> lower_m_;
  std::vector<double> coeff_;
};

}  // namespace heomfcs

#endif
