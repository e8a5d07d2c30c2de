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

// Trains one VQ-VAE per stream of a small synthetic VCV corpus, prints the
// place and manner ABX scores of each, and the late-fusion curve.
//
//   synthetic_fusion [epochs]

#include <cstdio>
#include <cstdlib>
#include <map>

#include "artvq/abx/evaluate.hpp"
#include "artvq/experiment/splits.hpp"
#include "artvq/experiment/synthetic.hpp"
#include "artvq/vqvae/train.hpp"

using namespace artvq;

int main(int argc, char** argv) {
  const int epochs = argc > 1 ? std::atoi(argv[1]) : 20;
  experiment::SyntheticCorpusConfig cc;
  cc.utterances = 40;
  cc.vcvs_per_utterance = 10;
  cc.min_phone_frames = 4;
  cc.max_phone_frames = 6;
  const auto corpus = experiment::generate_synthetic_corpus(cc);
  std::map<std::string, const experiment::SyntheticUtterance*> by_id;
  std::vector<std::string> ids;
  for (const auto& u : corpus.utterances) ids.push_back(u.id), by_id[u.id] = &u;
  const auto splits = experiment::make_splits(ids, {cc.seed, 0.2, 0.2, 0});

  std::vector<abx::VcvSegment> vcvs;
  for (const auto& id : splits.test) {
    auto v = abx::extract_vcv(id, by_id[id]->segments, corpus.table);
    vcvs.insert(vcvs.end(), v.begin(), v.end());
  }
  const auto sample = abx::sample_triplets(vcvs, {5000, RngSeed{7}});

  std::map<std::string, std::vector<abx::DistancePair>> dist;
  for (const std::string stream : {"articulatory", "acoustic"}) {
    auto get = [&](const std::string& id) {
      return stream == "articulatory" ? by_id[id]->articulatory : by_id[id]->acoustic;
    };
    std::vector<features::FeatureSequence> train, val;
    for (const auto& id : splits.train) train.push_back(get(id));
    for (const auto& id : splits.validation) val.push_back(get(id));
    const auto norm = features::fit_normalizer(train, "train");
    for (auto& s : train) s = norm.apply(s);
    for (auto& s : val) s = norm.apply(s);
    vqvae::TrainConfig tc;
    tc.max_epochs = epochs;
    auto trained = vqvae::train_vqvae<double>(train, val, tc, norm);
    abx::EmbeddingStore store;
    for (const auto& id : splits.test) store.add(id, vqvae::encode_sequence(trained.model, get(id)).embeddings);
    dist[stream] = abx::triplet_distances(vcvs, sample.triplets, store);
    const auto r = abx::make_report(stream, vcvs, sample, dist[stream], corpus.table, RngSeed{7});
    std::printf("%-13s overall %.3f  manner %.3f  place %.3f\n", stream.c_str(), r.overall,
                r.grouped.manner.value_or(0.0), r.grouped.place.value_or(0.0));
  }
  std::printf("\nomega    overall  manner  place\n");
  for (const auto& p : abx::fusion_sweep(vcvs, sample.triplets, dist["acoustic"], dist["articulatory"], corpus.table)) {
    std::printf("%-8.3f %.3f    %.3f   %.3f\n", p.omega, p.overall, p.manner.value_or(0.0), p.place.value_or(0.0));
  }
}
