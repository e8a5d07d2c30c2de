// Copyright 2026 The artvq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "artvq/abx/segments.hpp"
#include "artvq/core/rng.hpp"

namespace artvq::abx {

// Indices into the VCV list the triplets were drawn from.
struct AbxTriplet {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t x = 0;
};

struct SamplerOptions {
  std::size_t n = 5000;
  RngSeed seed{0};
  bool ordered_pairs = true;  // balance (c_A, c_B); false balances {c_A, c_B}
};

struct PairAllocation {
  std::string first;   // c_A when ordered
  std::string second;  // c_B when ordered
  std::uint64_t capacity = 0;  // distinct triplets available
  std::size_t requested = 0;
  std::size_t sampled = 0;
};

struct SampleResult {
  std::vector<AbxTriplet> triplets;
  std::vector<PairAllocation> pairs;
  std::vector<std::string> excluded_consonants;  // fewer than two occurrences
  std::size_t requested = 0;
  std::size_t skipped = 0;  // requested triplets that could not be drawn

  // Pairs whose allocation was cut by their capacity.
  std::vector<const PairAllocation*> short_pairs() const {
    std::vector<const PairAllocation*> out;
    for (const auto& p : pairs)
      if (p.sampled < p.requested) out.push_back(&p);
    return out;
  }
};

namespace detail {

// Floyd's algorithm: m distinct values from [0, n), in increasing order.
inline std::vector<std::uint64_t> sample_distinct(std::uint64_t n, std::uint64_t m, Rng& rng) {
  std::set<std::uint64_t> chosen;
  for (std::uint64_t j = n - m; j < n; ++j) {
    const std::uint64_t t = rng.below(j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  return {chosen.begin(), chosen.end()};
}

inline std::uint64_t ordered_capacity(std::size_t na, std::size_t nb) {
  return na < 2 ? 0 : static_cast<std::uint64_t>(na) * (na - 1) * nb;
}

// Decodes a flat index over (a, x != a, b).
inline AbxTriplet decode(std::uint64_t idx, const std::vector<std::size_t>& as,
                         const std::vector<std::size_t>& bs) {
  const std::uint64_t nb = bs.size();
  const std::uint64_t na = as.size();
  const std::uint64_t bi = idx % nb;
  idx /= nb;
  std::uint64_t xi = idx % (na - 1);
  const std::uint64_t ai = idx / (na - 1);
  if (xi >= ai) ++xi;
  return {as[ai], bs[bi], as[xi]};
}

}  // namespace detail

// Draws distinct triplets so that every consonant pair receives either
// floor(n / P) or floor(n / P) + 1 of them, P being the number of usable pairs;
// the pairs receiving the extra one are chosen by the seed. A pair with fewer
// distinct triplets than its share contributes all of them and the shortfall
// is counted in `skipped`.
inline SampleResult sample_triplets(const std::vector<VcvSegment>& vcvs, const SamplerOptions& opt) {
  std::map<std::string, std::vector<std::size_t>> by_consonant;
  for (std::size_t i = 0; i < vcvs.size(); ++i) by_consonant[vcvs[i].consonant].push_back(i);

  SampleResult res;
  res.requested = opt.n;
  for (const auto& [c, occ] : by_consonant)
    if (occ.size() < 2) res.excluded_consonants.push_back(c);

  for (auto i = by_consonant.begin(); i != by_consonant.end(); ++i) {
    for (auto j = by_consonant.begin(); j != by_consonant.end(); ++j) {
      if (i == j || (!opt.ordered_pairs && j->first < i->first)) continue;
      std::uint64_t cap = detail::ordered_capacity(i->second.size(), j->second.size());
      if (!opt.ordered_pairs) cap += detail::ordered_capacity(j->second.size(), i->second.size());
      if (cap == 0) continue;
      res.pairs.push_back({i->first, j->first, cap, 0, 0});
    }
  }
  if (res.pairs.empty()) {
    throw EvaluationError("ABX sampling: no consonant pair has two occurrences of one consonant and one of another");
  }

  Rng rng(opt.seed);
  const std::size_t p = res.pairs.size();
  std::vector<std::size_t> order(p);
  for (std::size_t k = 0; k < p; ++k) order[k] = k;
  rng.shuffle(order);
  for (std::size_t k = 0; k < p; ++k) {
    res.pairs[order[k]].requested = opt.n / p + (k < opt.n % p ? 1 : 0);
  }

  for (auto& pa : res.pairs) {
    const auto& first = by_consonant.at(pa.first);
    const auto& second = by_consonant.at(pa.second);
    const std::uint64_t take = std::min<std::uint64_t>(pa.requested, pa.capacity);
    pa.sampled = static_cast<std::size_t>(take);
    res.skipped += pa.requested - pa.sampled;
    if (take == 0) continue;
    const std::uint64_t forward = detail::ordered_capacity(first.size(), second.size());
    for (std::uint64_t idx : detail::sample_distinct(pa.capacity, take, rng)) {
      if (idx < forward) {
        res.triplets.push_back(detail::decode(idx, first, second));
      } else {
        res.triplets.push_back(detail::decode(idx - forward, second, first));
      }
    }
  }
  return res;
}

inline Json sample_summary_json(const SampleResult& s) {
  Json pairs = Json::array();
  for (const auto& p : s.pairs) {
    pairs.push_back({{"first", p.first},
                     {"second", p.second},
                     {"requested", p.requested},
                     {"sampled", p.sampled},
                     {"capacity", p.capacity}});
  }
  return Json{{"requested", s.requested},
              {"sampled", s.triplets.size()},
              {"skipped", s.skipped},
              {"excluded_consonants", s.excluded_consonants},
              {"pairs", pairs}};
}

}  // namespace artvq::abx
