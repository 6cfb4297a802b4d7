// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gense/cli/commands.hpp"

namespace {

using gense::cli::RunConfig;

std::optional<gense::ablate::VariantKind> variant_flag(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return gense::ablate::parse_variant(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gense: low-latency generative speech enhancement on discrete codec tokens"};
  app.require_subcommand(1);

  std::string config;
  bool force = false, resume = false;
  std::string variant;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config, "run configuration file")->required();
  };

  auto* synth = app.add_subcommand("synth-data", "synthesize the paired toy corpus and its manifest");
  add_config(synth);
  synth->add_flag("--force", force, "regenerate a non-empty corpus directory");

  auto* tcodec = app.add_subcommand("train-codec", "train the codec on the corpus's clean speech");
  add_config(tcodec);
  tcodec->add_flag("--resume", resume, "continue from the existing checkpoint");
  tcodec->add_flag("--force", force, "discard an existing checkpoint and start over");

  auto* tgen = app.add_subcommand("train-gen", "train a token generator or ablation variant");
  add_config(tgen);
  tgen->add_option("--variant", variant, "aligned | prefix | nar | mask")->default_val("aligned");
  tgen->add_flag("--resume", resume, "continue from the existing checkpoint");
  tgen->add_flag("--force", force, "discard an existing checkpoint and start over");

  gense::cli::EnhanceFlags ef;
  std::optional<double> temperature;
  std::optional<int> n;
  std::optional<uint64_t> seed;
  auto* enh = app.add_subcommand("enhance", "enhance one WAV file or a directory of WAV files");
  add_config(enh);
  enh->add_option("--in", ef.in, "input WAV file or directory")->required();
  enh->add_option("--out", ef.out, "output directory")->required();
  enh->add_option("--temperature", temperature, "sampling temperature (0 = greedy)");
  enh->add_option("--n", n, "number of candidates; 1 disables selection");
  enh->add_option("--seed", seed, "sampling seed");
  enh->add_option("--variant", variant, "aligned | prefix | nar | mask");
  enh->add_flag("--force", force, "overwrite existing outputs");

  bool mutant = false;
  auto* ev = app.add_subcommand("evaluate", "score a trained variant on a manifest and run the invariant probes");
  add_config(ev);
  ev->add_option("--variant", variant, "aligned | prefix | nar | mask");
  ev->add_flag("--inject-mutant", mutant, "probe a look-ahead encoder mutant (must fail)");
  ev->add_flag("--force", force, "overwrite existing reports");

  auto* ab = app.add_subcommand("ablate", "compare the four variants on one corpus");
  add_config(ab);
  ab->add_flag("--inject-mutant", mutant, "probe a look-ahead encoder mutant (must fail)");
  ab->add_flag("--force", force, "overwrite existing reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(gense::ExitCode::kValidation);
  }

  try {
    const RunConfig cfg = RunConfig::load(config);
    const gense::cli::TrainFlags tf{resume, force};
    if (synth->parsed()) return gense::cli::synth_data(cfg, force, std::cout);
    if (tcodec->parsed()) return gense::cli::train_codec(cfg, tf, std::cout);
    if (tgen->parsed()) return gense::cli::train_gen(cfg, gense::ablate::parse_variant(variant), tf, std::cout);
    if (enh->parsed()) {
      ef.temperature = temperature;
      ef.n = n;
      ef.seed = seed;
      ef.variant = variant_flag(variant);
      ef.force = force;
      return gense::cli::enhance(cfg, ef, std::cout, std::cerr);
    }
    gense::cli::EvalFlags vf;
    vf.force = force;
    if (mutant) vf.inject_mutant = true;
    if (ev->parsed()) {
      vf.variant = variant_flag(variant);
      return gense::cli::evaluate(cfg, vf, std::cout, std::cerr);
    }
    if (ab->parsed()) return gense::cli::ablate_cmd(cfg, vf, std::cout, std::cerr);
  } catch (const gense::Error& e) {
    std::cerr << "gense: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "gense: " << e.what() << "\n";
    return static_cast<int>(gense::ExitCode::kData);
  } catch (const std::exception& e) {
    std::cerr << "gense: " << e.what() << "\n";
    return static_cast<int>(gense::ExitCode::kValidation);
  }
  return static_cast<int>(gense::ExitCode::kValidation);
}
