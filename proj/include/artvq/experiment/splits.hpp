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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "artvq/core/io.hpp"
#include "artvq/core/rng.hpp"

namespace artvq::experiment {

inline constexpr std::size_t kMinUtterances = 5;

struct SplitPlan {
  RngSeed seed{0};
  double test_fraction = 0.2;
  double validation_fraction = 0.2;  // of the non-test part
  int repetition = 0;

  void validate() const {
    if (!(test_fraction > 0 && test_fraction < 1) || !(validation_fraction > 0 && validation_fraction < 1)) {
      throw ConfigurationError("split fractions must lie in (0, 1)");
    }
    if (repetition < 0) throw ConfigurationError("repetition index must be >= 0");
  }

  // Seed of everything drawn for this repetition.
  RngSeed repetition_seed() const { return derive_seed(seed, static_cast<std::uint64_t>(repetition)); }
};

// Utterance-level partition; each list is sorted.
struct Splits {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

inline Splits make_splits(std::vector<std::string> ids, const SplitPlan& plan) {
  plan.validate();
  const std::size_t n = ids.size();
  if (n < kMinUtterances) {
    throw ConfigurationError("need at least " + std::to_string(kMinUtterances) + " utterances to split, got " +
                             std::to_string(n));
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ConfigurationError("utterance ids must be unique");
  }
  const auto n_test = static_cast<std::size_t>(std::lround(plan.test_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(
      std::lround(plan.validation_fraction * (1.0 - plan.test_fraction) * static_cast<double>(n)));
  if (n_test < 1 || n_val < 1 || n_test + n_val >= n) {
    throw ConfigurationError("split of " + std::to_string(n) + " utterances leaves an empty partition");
  }
  Rng rng(derive_seed(plan.repetition_seed(), 1));
  rng.shuffle(ids);
  Splits s;
  s.test.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.validation.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_test),
                      ids.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  s.train.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), ids.end());
  for (auto* v : {&s.train, &s.validation, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

inline Json splits_to_json(const Splits& s, const SplitPlan& plan) {
  return Json{{"seed", plan.seed.value},
              {"repetition", plan.repetition},
              {"test_fraction", plan.test_fraction},
              {"validation_fraction", plan.validation_fraction},
              {"train", s.train},
              {"validation", s.validation},
              {"test", s.test}};
}

inline Splits splits_from_json(const Json& j) {
  Splits s;
  try {
    s.train = j.at("train").get<std::vector<std::string>>();
    s.validation = j.at("validation").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw IngestionError(std::string("malformed split file: ") + e.what());
  }
  return s;
}

}  // namespace artvq::experiment
