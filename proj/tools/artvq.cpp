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

// artvq: command-line front end.
//
//   artvq features extract --manifest M --out DIR
//   artvq vqvae train      --features DIR --modality acoustic --out model.json
//   artvq abx eval         --features DIR --model model.json --triplets 5000 --seed 7 --out report.json
//   artvq fusion sweep     --features DIR --acoustic-model A --articulatory-model B
//                          --omega-min 0.1 --omega-max 10 --points 25 --out sweep.csv
//   artvq invert pretrain  --features REF_DIR --out synth.json
//   artvq invert train     --features NEW_DIR --synthesizer synth.json --out inv.json
//   artvq invert apply     --features NEW_DIR --synthesizer synth.json --inversion inv.json --out DIR
//   artvq experiment run   --manifest M [--config exp.json] [--name N] [--seed S]
//   artvq report render    --experiment out/N
//   artvq corpus synth     --out DIR
//
// Exit status: 0 on success, 1 on a runtime error, 2 on a usage error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "artvq/experiment/commands.hpp"

namespace {

using namespace artvq;
using artvq::experiment::Modality;

void say(const std::string& s) { std::cerr << s << "\n"; }

std::vector<Modality> parse_modalities(const std::vector<std::string>& names) {
  std::vector<Modality> out;
  for (const auto& n : names) out.push_back(experiment::modality_from_key(n));
  return out;
}

// Reads a JSON config file when given; flags set afterwards override it.
Json config_file(const std::string& path) {
  if (path.empty()) return Json::object();
  if (!fs::is_regular_file(path)) throw ConfigurationError("config file not found: " + path);
  return read_json_file(path);
}

// Refuses to write over an existing output unless asked to.
void check_output(const fs::path& p, bool overwrite) {
  if (fs::exists(p) && !overwrite) {
    throw ConfigurationError(p.string() + " already exists (pass --overwrite to replace it)");
  }
}

struct VqFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> k, d, max_epochs, patience;

  void add(CLI::App* app) {
    app->add_option("--config", config, "VQ-VAE training config (JSON)");
    app->add_option("--seed", seed, "training seed");
    app->add_option("-K,--codebook-size", k, "codebook size K");
    app->add_option("-D,--embedding-dim", d, "embedding dimension D");
    app->add_option("--max-epochs", max_epochs, "epoch budget");
    app->add_option("--patience", patience, "early-stopping patience (epochs)");
  }

  vqvae::TrainConfig resolve() const {
    vqvae::TrainConfig c = vqvae::train_config_from_json(config_file(config));
    if (seed) c.seed = RngSeed{*seed};
    if (k) c.codebook_size = *k;
    if (d) c.embedding_dim = *d;
    if (max_epochs) c.max_epochs = *max_epochs;
    if (patience) c.patience = *patience;
    c.validate();
    return c;
  }
};

struct NetFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_epochs;

  void add(CLI::App* app) {
    app->add_option("--config", config, "network training config (JSON)");
    app->add_option("--seed", seed, "training seed");
    app->add_option("--max-epochs", max_epochs, "epoch budget");
  }

  inversion::NetTrainConfig resolve() const {
    auto c = inversion::net_train_config_from_json(config_file(config));
    if (seed) c.seed = RngSeed{*seed};
    if (max_epochs) c.max_epochs = *max_epochs;
    c.validate();
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"artvq: vector-quantized speech units from articulatory and acoustic features, with ABX evaluation"};
  app.require_subcommand(1);
  bool overwrite = false;
  app.add_flag("--overwrite", overwrite, "replace existing outputs");
  std::function<void()> action;

  // features extract
  auto* features_cmd = app.add_subcommand("features", "feature extraction");
  features_cmd->require_subcommand(1);
  auto* extract = features_cmd->add_subcommand("extract", "extract articulatory / acoustic features of a corpus");
  experiment::ExtractOptions xo;
  std::string x_manifest, x_out;
  std::vector<std::string> x_mods{"articulatory", "acoustic"};
  std::uint64_t x_seed = 0;
  extract->add_option("--manifest", x_manifest, "corpus manifest (JSON)")->required();
  extract->add_option("--out", x_out, "output feature directory")->required();
  extract->add_option("--modality", x_mods, "articulatory, acoustic, fused")->expected(1, 3);
  extract->add_option("--seed", x_seed, "split seed (guided PCA is fitted on its training split)");
  extract->add_option("--repetition", xo.repetition, "split repetition index");
  extract->add_option("--speaker", xo.speaker, "restrict to one speaker");
  extract->callback([&] {
    action = [&] {
      xo.manifest = x_manifest;
      xo.out = x_out;
      xo.modalities = parse_modalities(x_mods);
      xo.seed = RngSeed{x_seed};
      if (!fs::is_regular_file(xo.manifest)) throw IngestionError("manifest not found: " + x_manifest);
      check_output(xo.out, overwrite);
      const Json info = experiment::features_extract(xo);
      std::cout << "wrote features of " << info.at("utterances").get<std::size_t>() << " utterances to " << x_out << "\n";
    };
  });

  // vqvae train
  auto* vq_cmd = app.add_subcommand("vqvae", "VQ-VAE models");
  vq_cmd->require_subcommand(1);
  auto* vq_train = vq_cmd->add_subcommand("train", "train a VQ-VAE on one modality of a feature directory");
  experiment::VqTrainOptions vo;
  std::string v_features, v_out, v_mod = "acoustic";
  VqFlags v_flags;
  vq_train->add_option("--features", v_features, "feature directory")->required();
  vq_train->add_option("--modality", v_mod, "articulatory, acoustic, fused, articulatory-inferred");
  vq_train->add_option("--out", v_out, "checkpoint path (JSON)")->required();
  v_flags.add(vq_train);
  vq_train->callback([&] {
    action = [&] {
      vo.features = v_features;
      vo.out = v_out;
      vo.modality = experiment::modality_from_key(v_mod);
      vo.config = v_flags.resolve();
      check_output(vo.out, overwrite);
      auto r = experiment::vqvae_train(vo, [](const vqvae::EpochRecord& e) {
        say("epoch " + std::to_string(e.epoch) + " train " + format_double(e.train_loss) + " val " +
            format_double(e.validation_loss));
      });
      std::cout << "best epoch " << r.best_epoch << ", validation loss " << format_double(r.best_validation_loss)
                << "; wrote " << v_out << "\n";
    };
  });

  // abx eval
  auto* abx_cmd = app.add_subcommand("abx", "ABX discriminability");
  abx_cmd->require_subcommand(1);
  auto* abx_eval = abx_cmd->add_subcommand("eval", "ABX scores of a model (or raw features) on the test split");
  experiment::AbxOptions ao;
  std::string a_features, a_model, a_manifest, a_out, a_mod = "acoustic";
  std::uint64_t a_seed = 0;
  abx_eval->add_option("--features", a_features, "feature directory")->required();
  abx_eval->add_option("--model", a_model, "VQ-VAE checkpoint; omit to score the features directly");
  abx_eval->add_option("--modality", a_mod, "feature stream scored when no model is given");
  abx_eval->add_option("--manifest", a_manifest, "manifest (default: the one the features came from)");
  abx_eval->add_option("--triplets", ao.triplets, "number of (A, B, X) triplets");
  abx_eval->add_option("--seed", a_seed, "triplet sampling seed");
  abx_eval->add_option("--out", a_out, "report path (JSON)")->required();
  abx_eval->callback([&] {
    action = [&] {
      ao.features = a_features;
      if (!a_model.empty()) ao.model = a_model;
      if (!a_manifest.empty()) ao.manifest = a_manifest;
      ao.modality = experiment::modality_from_key(a_mod);
      ao.seed = RngSeed{a_seed};
      ao.out = a_out;
      check_output(ao.out, overwrite);
      const auto r = experiment::abx_eval(ao);
      std::cout << r.representation << ": overall " << format_double(r.overall) << " on " << r.triplet_count
                << " triplets (" << r.skipped << " skipped); wrote " << a_out << "\n";
    };
  });

  // fusion sweep
  auto* fusion_cmd = app.add_subcommand("fusion", "late fusion of acoustic and articulatory distances");
  fusion_cmd->require_subcommand(1);
  auto* sweep = fusion_cmd->add_subcommand("sweep", "ABX scores over a log-spaced grid of fusion weights");
  experiment::FusionOptions fo;
  std::string f_features, f_ac, f_art, f_manifest, f_out;
  std::uint64_t f_seed = 0;
  sweep->add_option("--features", f_features, "feature directory")->required();
  sweep->add_option("--acoustic-model", f_ac, "acoustic VQ-VAE checkpoint")->required();
  sweep->add_option("--articulatory-model", f_art, "articulatory VQ-VAE checkpoint")->required();
  sweep->add_option("--manifest", f_manifest, "manifest (default: the one the features came from)");
  sweep->add_option("--omega-min", fo.omega_min, "smallest acoustic weight");
  sweep->add_option("--omega-max", fo.omega_max, "largest acoustic weight");
  sweep->add_option("--points", fo.points, "grid points");
  sweep->add_option("--triplets", fo.triplets, "number of (A, B, X) triplets");
  sweep->add_option("--seed", f_seed, "triplet sampling seed");
  sweep->add_option("--out", f_out, "curve path (CSV)")->required();
  sweep->callback([&] {
    action = [&] {
      fo.features = f_features;
      fo.acoustic_model = f_ac;
      fo.articulatory_model = f_art;
      if (!f_manifest.empty()) fo.manifest = f_manifest;
      fo.seed = RngSeed{f_seed};
      fo.out = f_out;
      check_output(fo.out, overwrite);
      const auto curve = experiment::fusion_sweep(fo);
      std::cout << "wrote " << curve.size() << " fusion points to " << f_out << "\n";
    };
  });

  // invert
  auto* invert_cmd = app.add_subcommand("invert", "acoustic-to-articulatory inversion");
  invert_cmd->require_subcommand(1);
  experiment::InvertOptions io;
  std::string i_features, i_out, i_synth, i_inv;
  NetFlags i_flags;
  auto* pretrain = invert_cmd->add_subcommand("pretrain", "train the articulatory-to-acoustic synthesizer");
  pretrain->add_option("--features", i_features, "reference speaker's feature directory")->required();
  pretrain->add_option("--out", i_out, "synthesizer checkpoint (JSON)")->required();
  i_flags.add(pretrain);
  auto* itrain = invert_cmd->add_subcommand("train", "train the inversion network through the frozen synthesizer");
  itrain->add_option("--features", i_features, "audio-only speaker's feature directory")->required();
  itrain->add_option("--synthesizer", i_synth, "synthesizer checkpoint")->required();
  itrain->add_option("--out", i_out, "inversion checkpoint (JSON)")->required();
  i_flags.add(itrain);
  auto* apply = invert_cmd->add_subcommand("apply", "infer articulatory features from acoustic features");
  apply->add_option("--features", i_features, "feature directory with acoustic features")->required();
  apply->add_option("--synthesizer", i_synth, "synthesizer checkpoint")->required();
  apply->add_option("--inversion", i_inv, "inversion checkpoint")->required();
  apply->add_option("--out", i_out, "output feature directory")->required();
  auto fill_invert = [&] {
    io.features = i_features;
    io.out = i_out;
    if (!i_synth.empty()) io.synthesizer = i_synth;
    if (!i_inv.empty()) io.inversion = i_inv;
    check_output(io.out, overwrite);
  };
  auto log_fit = [](const inversion::FitRecord& r) {
    say("epoch " + std::to_string(r.epoch) + " train " + format_double(r.train_loss) + " val " +
        format_double(r.validation_loss));
  };
  pretrain->callback([&] {
    action = [&] {
      fill_invert();
      io.config = i_flags.resolve();
      const auto fit = experiment::invert_pretrain(io, log_fit);
      std::cout << "synthesizer validation MSE " << format_double(fit.best_validation_loss) << "; wrote " << i_out << "\n";
    };
  });
  itrain->callback([&] {
    action = [&] {
      fill_invert();
      io.config = i_flags.resolve();
      const auto fit = experiment::invert_train(io, log_fit);
      std::cout << "resynthesis validation MSE " << format_double(fit.best_validation_loss) << "; wrote " << i_out << "\n";
    };
  });
  apply->callback([&] {
    action = [&] {
      fill_invert();
      const auto n = experiment::invert_apply(io);
      std::cout << "wrote inferred articulatory features of " << n << " utterances to " << i_out << "\n";
    };
  });

  // experiment run
  auto* exp_cmd = app.add_subcommand("experiment", "repeated train/evaluate protocol");
  exp_cmd->require_subcommand(1);
  auto* run = exp_cmd->add_subcommand("run", "run every repetition and write reports under $ARTVQ_OUTPUT_ROOT (default ./out)");
  std::string e_manifest, e_config, e_name, e_speaker;
  std::optional<std::uint64_t> e_seed;
  std::optional<int> e_reps;
  std::optional<std::size_t> e_triplets;
  std::vector<std::string> e_mods;
  int e_jobs = 1;
  VqFlags e_vq;
  run->add_option("--manifest", e_manifest, "corpus manifest (JSON)")->required();
  run->add_option("--config", e_config, "experiment config (JSON)");
  run->add_option("--name", e_name, "experiment name (output subdirectory)");
  run->add_option("--seed", e_seed, "master seed");
  run->add_option("--repetitions", e_reps, "number of repetitions");
  run->add_option("--triplets", e_triplets, "ABX triplets per repetition");
  run->add_option("--modality", e_mods, "articulatory, acoustic, fused-early");
  run->add_option("--speaker", e_speaker, "restrict to one speaker");
  run->add_option("--jobs", e_jobs, "repetitions run in parallel");
  run->add_option("-K,--codebook-size", e_vq.k, "codebook size K");
  run->add_option("-D,--embedding-dim", e_vq.d, "embedding dimension D");
  run->add_option("--max-epochs", e_vq.max_epochs, "VQ-VAE epoch budget");
  run->callback([&] {
    action = [&] {
      if (!fs::is_regular_file(e_manifest)) throw IngestionError("manifest not found: " + e_manifest);
      auto cfg = experiment::ExperimentConfig::from_json(config_file(e_config));
      if (!e_name.empty()) cfg.name = e_name;
      if (e_seed) cfg.seed = RngSeed{*e_seed};
      if (e_reps) cfg.repetitions = *e_reps;
      if (e_triplets) cfg.triplets = *e_triplets;
      if (!e_mods.empty()) cfg.modalities = parse_modalities(e_mods);
      if (!e_speaker.empty()) cfg.speaker = e_speaker;
      if (e_vq.k) cfg.vqvae.codebook_size = *e_vq.k;
      if (e_vq.d) cfg.vqvae.embedding_dim = *e_vq.d;
      if (e_vq.max_epochs) cfg.vqvae.max_epochs = *e_vq.max_epochs;
      cfg.jobs = e_jobs;
      cfg.validate();
      const auto manifest = experiment::load_manifest(e_manifest);
      const fs::path root = experiment::output_root();
      const fs::path dir = root / cfg.name;
      if (fs::exists(dir)) {
        if (!overwrite) throw ConfigurationError(dir.string() + " already exists (pass --overwrite to replace it)");
        fs::remove_all(dir);
      }
      const auto result = experiment::run_experiment(manifest, cfg, root, e_manifest, say);
      std::cout << experiment::render_summary_markdown(result.summary);
      std::cout << "wrote " << result.directory.string() << "\n";
      if (result.failures() == result.repetitions.size()) throw EvaluationError("every repetition failed");
    };
  });

  // report render
  auto* report_cmd = app.add_subcommand("report", "experiment reports");
  report_cmd->require_subcommand(1);
  auto* render = report_cmd->add_subcommand("render", "recompute and print the summary of an experiment");
  std::string r_dir;
  render->add_option("--experiment", r_dir, "experiment directory (out/<name>)")->required();
  render->callback([&] {
    action = [&] {
      const Json s = experiment::report_render(r_dir);
      std::cout << experiment::render_summary_markdown(s);
    };
  });

  // corpus synth
  auto* corpus_cmd = app.add_subcommand("corpus", "corpus utilities");
  corpus_cmd->require_subcommand(1);
  auto* synth = corpus_cmd->add_subcommand("synth", "write a synthetic VCV corpus (wav, EMA, segmentation, manifest)");
  experiment::SyntheticCorpusConfig sc;
  std::string s_out;
  std::uint64_t s_seed = 0;
  synth->add_option("--out", s_out, "output directory")->required();
  synth->add_option("--utterances", sc.utterances, "number of utterances");
  synth->add_option("--vcvs", sc.vcvs_per_utterance, "VCVs per utterance");
  synth->add_option("--speaker", sc.speaker, "speaker name");
  synth->add_option("--layout", sc.layout, "EMA layout: mocha or pb2007");
  synth->add_option("--noise", sc.noise, "per-frame noise level");
  synth->add_option("--seed", s_seed, "generator seed");
  synth->callback([&] {
    action = [&] {
      sc.seed = RngSeed{s_seed};
      check_output(fs::path(s_out) / "manifest.json", overwrite);
      const auto corpus = experiment::generate_synthetic_corpus(sc);
      const fs::path manifest = experiment::write_synthetic_corpus(corpus, s_out);
      experiment::write_run_record(manifest, "corpus synth", sc.to_json());
      std::cout << "wrote " << corpus.utterances.size() << " utterances; manifest " << manifest.string() << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (action) action();
  } catch (const artvq::Error& e) {
    std::cerr << "artvq: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "artvq: unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
