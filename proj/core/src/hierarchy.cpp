#include "heomfcs/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "heomfcs/special.hpp"

namespace heomfcs {

double partition_coefficient(const std::vector<int>& multiplicities) {
  int m = 0;
  for (size_t q = 0; q < multiplicities.size(); ++q) {
    m += static_cast<int>(q + 1) * multiplicities[q];
  }
  double value = factorial(m);
  for (size_t q = 0; q < multiplicities.size(); ++q) {
    const int mq = multiplicities[q];
    if (mq == 0) continue;
    value /= std::pow(factorial(static_cast<int>(q + 1)), mq);
    value /= factorial(mq);
  }
  return std::round(value);
}

namespace {

void emit_partitions(int m_max, int q, int remaining, std::vector<int>& cur,
                     std::vector<std::vector<int>>& out) {
  if (q > m_max) {
    out.push_back(cur);
    return;
  }
  for (int mq = 0; mq * q <= remaining; ++mq) {
    cur[q - 1] = mq;
    emit_partitions(m_max, q + 1, remaining - mq * q, cur, out);
  }
  cur[q - 1] = 0;
}

}  // namespace

std::vector<std::vector<int>> partitions_up_to(int m_max) {
  std::vector<std::vector<int>> raw;
  if (m_max <= 0) {
    raw.push_back({});
    return raw;
  }
  std::vector<int> cur(m_max, 0);
  emit_partitions(m_max, 1, m_max, cur, raw);
  std::stable_sort(raw.begin(), raw.end(),
                   [](const std::vector<int>& a, const std::vector<int>& b) {
                     int wa = 0, wb = 0;
                     for (size_t q = 0; q < a.size(); ++q) {
                       wa += static_cast<int>(q + 1) * a[q];
                       wb += static_cast<int>(q + 1) * b[q];
                     }
                     if (wa != wb) return wa < wb;
                     return a < b;
                   });
  return raw;
}

IndexSpace IndexSpace::enumerate(int n_baths, int n_terms, int n_max,
                                 int m_max) {
  return enumerate(std::vector<int>(n_baths, n_terms), n_max, m_max);
}

IndexSpace IndexSpace::enumerate(const std::vector<int>& terms_per_bath,
                                 int n_max, int m_max) {
  if (n_max < 0 || m_max < 0) {
    throw validation_error("hierarchy truncation must be >= 0");
  }
  IndexSpace sp;
  sp.n_max_ = n_max;
  sp.m_max_ = m_max;
  sp.terms_per_bath_ = terms_per_bath;
  int slots = 0;
  for (int t : terms_per_bath) {
    if (t < 0) throw validation_error("negative term count");
    slots += 2 * t;
  }
  sp.slots_ = slots;

  // Multisets by level, lexicographic inside a level.
  std::vector<uint8_t> occ(slots, 0);
  std::unordered_map<std::string, int32_t> where;
  auto key_of = [&](const std::vector<uint8_t>& v) {
    return std::string(reinterpret_cast<const char*>(v.data()), v.size());
  };
  auto emit_level = [&](auto&& self, int slot, int remaining,
                        int lvl) -> void {
    if (slot == slots - 1) {
      occ[slot] = static_cast<uint8_t>(remaining);
      where.emplace(key_of(occ), static_cast<int32_t>(sp.level_.size()));
      sp.occ_.insert(sp.occ_.end(), occ.begin(), occ.end());
      sp.level_.push_back(static_cast<uint8_t>(lvl));
      occ[slot] = 0;
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      occ[slot] = static_cast<uint8_t>(c);
      self(self, slot + 1, remaining - c, lvl);
    }
    occ[slot] = 0;
  };
  if (slots == 0) {
    sp.level_.push_back(0);
    where.emplace(std::string(), 0);
  } else {
    for (int lvl = 0; lvl <= n_max; ++lvl) {
      emit_level(emit_level, 0, lvl, lvl);
    }
  }

  const int count = static_cast<int>(sp.level_.size());
  sp.raise_.assign(static_cast<size_t>(count) * std::max(1, slots), -1);
  sp.lower_.assign(static_cast<size_t>(count) * std::max(1, slots), -1);
  std::vector<uint8_t> probe(slots);
  for (int i = 0; i < count; ++i) {
    const uint8_t* base = sp.occupations(i);
    probe.assign(base, base + slots);
    for (int s = 0; s < slots; ++s) {
      if (sp.level_[i] < n_max) {
        ++probe[s];
        auto it = where.find(key_of(probe));
        sp.raise_[size_t(i) * slots + s] = it == where.end() ? -1 : it->second;
        --probe[s];
      }
      if (probe[s] > 0) {
        --probe[s];
        auto it = where.find(key_of(probe));
        sp.lower_[size_t(i) * slots + s] = it == where.end() ? -1 : it->second;
        ++probe[s];
      }
    }
  }

  sp.partitions_ = partitions_up_to(m_max);
  const int nsec = static_cast<int>(sp.partitions_.size());
  sp.weight_.resize(nsec);
  sp.coeff_.resize(nsec);
  sp.lower_m_.assign(static_cast<size_t>(nsec) * std::max(1, m_max), -1);
  std::unordered_map<std::string, int> sector_where;
  auto sector_key = [](const std::vector<int>& v) {
    std::string k;
    for (int x : v) {
      k += std::to_string(x);
      k += ',';
    }
    return k;
  };
  for (int s = 0; s < nsec; ++s) {
    sector_where.emplace(sector_key(sp.partitions_[s]), s);
    int w = 0;
    for (size_t q = 0; q < sp.partitions_[s].size(); ++q) {
      w += static_cast<int>(q + 1) * sp.partitions_[s][q];
    }
    sp.weight_[s] = w;
    sp.coeff_[s] = partition_coefficient(sp.partitions_[s]);
  }
  for (int s = 0; s < nsec; ++s) {
    for (int q = 1; q <= m_max; ++q) {
      if (sp.partitions_[s][q - 1] == 0) continue;
      auto reduced = sp.partitions_[s];
      --reduced[q - 1];
      auto it = sector_where.find(sector_key(reduced));
      sp.lower_m_[size_t(s) * m_max + (q - 1)] =
          it == sector_where.end() ? -1 : it->second;
    }
  }
  return sp;
}

uint64_t IndexSpace::structure_hash() const {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<uint64_t>(slots_));
  mix(static_cast<uint64_t>(n_max_));
  mix(static_cast<uint64_t>(m_max_));
  // the bath split matters: equal totals with different per-bath term
  // counts pair the same state vector with different operator tables
  mix(static_cast<uint64_t>(terms_per_bath_.size()));
  for (int t : terms_per_bath_) mix(static_cast<uint64_t>(t));
  mix(static_cast<uint64_t>(level_.size()));
  mix(static_cast<uint64_t>(partitions_.size()));
  for (uint8_t b : occ_) mix(b);
  for (const auto& p : partitions_) {
    for (int x : p) mix(static_cast<uint64_t>(x));
  }
  return h;
}

HierarchyIndex IndexSpace::unpack(long long flat) const {
  if (flat < 0 || flat >= total()) {
    throw validation_error("flat hierarchy index out of range");
  }
  const int sector = static_cast<int>(flat / n_count());
  const int off = static_cast<int>(flat % n_count());
  HierarchyIndex idx;
  idx.n.assign(occupations(off), occupations(off) + slots_);
  idx.m = partitions_[sector];
  return idx;
}

long long IndexSpace::pack(const HierarchyIndex& idx) const {
  if (static_cast<int>(idx.n.size()) != slots_) return -1;
  int off = -1;
  for (int i = 0; i < n_count(); ++i) {
    const uint8_t* o = occupations(i);
    bool same = true;
    for (int s = 0; s < slots_; ++s) {
      if (o[s] != idx.n[s]) {
        same = false;
        break;
      }
    }
    if (same) {
      off = i;
      break;
    }
  }
  if (off < 0) return -1;
  for (int sec = 0; sec < sector_count(); ++sec) {
    std::vector<int> padded = idx.m;
    padded.resize(std::max<size_t>(padded.size(), partitions_[sec].size()), 0);
    std::vector<int> ref = partitions_[sec];
    ref.resize(padded.size(), 0);
    if (padded == ref) {
      return static_cast<long long>(sec) * n_count() + off;
    }
  }
  return -1;
}

}  // namespace heomfcs
