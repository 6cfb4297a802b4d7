// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gense/cli/commands.hpp"

namespace gense::cli {
namespace {

const char* kTinyConfig = R"(# desk-test configuration
[data]
n = 6
seed = 3
duration_s = 1
[codec]
channels = 4,4,4,4
tcm_mid = 16
tcm_channels = 16
dilations = 1,2
gru_width = 16
codewords = 16
[generator]
layers = 1
heads = 2
d_token = 32
ff_dim = 48
codewords = 16
feature_dim = 32
extractor_mid = 16
[training]
steps = 20
batch_size = 2
segment_tokens = 10
codec_segment_frames = 40
log_every = 5
checkpoint_every = 10
heldout = 2
[inference]
num_inferences = 2
seed = 4
[evaluate]
probes = 20
probe_frames = 40
[ablation]
train_utterances = 4
heldout_utterances = 2
steps = 5
length_factors = 1,2
)";

const char* no_env(const char*) { return nullptr; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

// A fresh directory holding tiny.ini; `extra` is appended to the config.
struct Workspace {
  fs::path dir;
  RunConfig cfg;
  std::ostringstream out, err;

  explicit Workspace(const std::string& name, const std::string& text = kTinyConfig) {
    dir = fs::temp_directory_path() / ("gense_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "tiny.ini") << text;
    cfg = RunConfig::load(dir / "tiny.ini", no_env);
  }
  ~Workspace() { fs::remove_all(dir); }

  void trained(std::initializer_list<VariantKind> kinds) {
    ASSERT_EQ(synth_data(cfg, false, out), 0);
    ASSERT_EQ(train_codec(cfg, {}, out), 0);
    for (auto k : kinds) ASSERT_EQ(train_gen(cfg, k, {}, out), 0);
  }
};

TEST(RunConfig, DefaultsAndPathResolution) {
  const auto c = RunConfig::parse("[paths]\ncorpus = data\n", "/x/y/run.ini", no_env);
  EXPECT_EQ(c.paths.corpus, fs::path("/x/y/data"));
  EXPECT_EQ(c.paths.checkpoints, fs::path("/x/y/checkpoints"));
  EXPECT_DOUBLE_EQ(c.training.lr, 2e-4);
  EXPECT_DOUBLE_EQ(c.inference.cfg.temperature, 0.8);
  EXPECT_EQ(c.inference.cfg.num_inferences, 3);
}

TEST(RunConfig, RejectsUnknownKeysAndSectionsByName) {
  auto message = [](const std::string& text) {
    try {
      RunConfig::parse(text, {}, no_env);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("[training]\nlearning_rate = 1\n").find("training.learning_rate"), std::string::npos);
  EXPECT_NE(message("[codec]\nwidth = 3\n").find("codec.width"), std::string::npos);
  EXPECT_NE(message("[optim]\nlr = 1\n").find("[optim]"), std::string::npos);
  EXPECT_NE(message("lr = 1\n").find("'lr'"), std::string::npos);
  EXPECT_NE(message("[data]\nsnr_min = -10\n").find("data.snr_min"), std::string::npos);
  EXPECT_NE(message("[data]\nsnr_max = 30\n").find("data.snr_max"), std::string::npos);
  EXPECT_NE(message("[data]\nsnr_min = 10\nsnr_max = 5\n").find("data.snr_min"), std::string::npos);
  EXPECT_NE(message("[inference]\ntemperature = -1\n").find("inference.temperature"), std::string::npos);
  EXPECT_NE(message("[ablation]\nsource = cloud\n").find("ablation.source"), std::string::npos);
  EXPECT_THROW(RunConfig::parse("[inference]\nvariant = diffusion\n", {}, no_env), ConfigError);
}

TEST(RunConfig, EnvironmentOverridesPathsOnly) {
  auto env = [](const char* name) -> const char* {
    return std::string(name) == "GENSE_REPORTS" ? "/tmp/elsewhere" : nullptr;
  };
  const auto c = RunConfig::parse("[paths]\nreports = r\n", "/a/run.ini", env);
  EXPECT_EQ(c.paths.reports, fs::path("/tmp/elsewhere"));
  EXPECT_EQ(c.paths.corpus, fs::path("/a/corpus"));
  ASSERT_EQ(c.overrides.size(), 1u);
  EXPECT_EQ(c.overrides[0], "GENSE_REPORTS=/tmp/elsewhere");
}

TEST(RunConfig, StepsFromEpochs) {
  TrainingSection t;
  t.epochs = 2;
  t.batch_size = 4;
  EXPECT_EQ(t.steps_for(1000, 50), 10);
  EXPECT_EQ(t.steps_for(1001, 50), 11);
  t.steps = 7;
  EXPECT_EQ(t.steps_for(1000, 50), 7);
}

TEST(SynthData, WritesPairsManifestAndRefusesRerun) {
  Workspace w("synth");
  ASSERT_EQ(synth_data(w.cfg, false, w.out), 0);
  const fs::path corpus = w.cfg.paths.corpus;
  int wavs = 0;
  for (const auto& e : fs::recursive_directory_iterator(corpus)) wavs += e.path().extension() == ".wav";
  EXPECT_EQ(wavs, 12);
  EXPECT_EQ(count_lines(slurp(corpus / "manifest.tsv")), 6);
  EXPECT_EQ(slurp(corpus / "config.txt"), kTinyConfig);
  EXPECT_NE(w.out.str().find("realized SNR over 6 pairs"), std::string::npos);

  const std::string manifest = slurp(corpus / "manifest.tsv");
  const std::string wav = slurp(corpus / "noisy" / "00003.wav");
  EXPECT_THROW(synth_data(w.cfg, false, w.out), ConfigError);
  ASSERT_EQ(synth_data(w.cfg, true, w.out), 0);
  EXPECT_EQ(slurp(corpus / "manifest.tsv"), manifest);
  EXPECT_EQ(slurp(corpus / "noisy" / "00003.wav"), wav);
}

TEST(TrainCodec, LogRowsAndResumeEquivalence) {
  Workspace w("codec_resume");
  ASSERT_EQ(synth_data(w.cfg, false, w.out), 0);
  ASSERT_EQ(train_codec(w.cfg, {}, w.out), 0);
  const std::string full = slurp(w.cfg.codec_checkpoint());
  const std::string full_log = slurp(w.cfg.codec_dir() / "loss.tsv");
  EXPECT_EQ(count_lines(full_log), 1 + 20 / 5);
  EXPECT_THROW(train_codec(w.cfg, {}, w.out), ConfigError);

  // 12 steps (checkpoint at 10 and 12), then resume to 20.
  RunConfig half = w.cfg;
  half.training.steps = 12;
  ASSERT_EQ(train_codec(half, {false, true}, w.out), 0);
  ASSERT_EQ(train_codec(w.cfg, {true, false}, w.out), 0);
  EXPECT_EQ(slurp(w.cfg.codec_checkpoint()), full);
  EXPECT_EQ(slurp(w.cfg.codec_dir() / "loss.tsv"), full_log);
}

TEST(TrainGen, NeedsCodecExceptForMask) {
  Workspace w("gen_needs_codec");
  ASSERT_EQ(synth_data(w.cfg, false, w.out), 0);
  try {
    train_gen(w.cfg, VariantKind::kAligned, {}, w.out);
    FAIL() << "expected a DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("gense train-codec --config"), std::string::npos);
  }
  EXPECT_EQ(train_gen(w.cfg, VariantKind::kMask, {}, w.out), 0);
  EXPECT_TRUE(fs::exists(w.cfg.variant_checkpoint(VariantKind::kMask)));
}

TEST(TrainGen, ResumeEquivalenceAndLog) {
  Workspace w("gen_resume");
  w.trained({VariantKind::kAligned});
  const auto ckpt = w.cfg.variant_checkpoint(VariantKind::kAligned);
  const std::string full = slurp(ckpt);
  const std::string log = slurp(w.cfg.variant_dir(VariantKind::kAligned) / "loss.tsv");
  EXPECT_EQ(count_lines(log), 1 + 4);
  EXPECT_EQ(log.substr(0, log.find('\n')), "step\tloss\taccuracy\tgrad_norm\theldout_loss\theldout_accuracy");

  RunConfig half = w.cfg;
  half.training.steps = 10;
  ASSERT_EQ(train_gen(half, VariantKind::kAligned, {false, true}, w.out), 0);
  ASSERT_EQ(train_gen(w.cfg, VariantKind::kAligned, {true, false}, w.out), 0);
  EXPECT_EQ(slurp(ckpt), full);
  EXPECT_EQ(slurp(w.cfg.variant_dir(VariantKind::kAligned) / "loss.tsv"), log);

  // A different model config cannot resume this checkpoint.
  RunConfig other = w.cfg;
  other.generator.ff_dim = 40;
  EXPECT_THROW(train_gen(other, VariantKind::kAligned, {true, false}, w.out), ConfigError);
}

TEST(Enhance, DurationSeedsAndPerFileErrors) {
  Workspace w("enhance");
  w.trained({VariantKind::kAligned, VariantKind::kNar});
  const fs::path noisy = w.cfg.paths.corpus / "noisy";
  EnhanceFlags f;
  f.in = noisy;
  f.out = w.dir / "a";
  f.seed = 11;
  ASSERT_EQ(enhance(w.cfg, f, w.out, w.err), 0);
  for (const auto& e : fs::directory_iterator(noisy))
    EXPECT_EQ(signal::load_wav((f.out / e.path().filename()).string()).size(),
              signal::load_wav(e.path().string()).size());
  const std::string log = slurp(f.out / "enhance.log");
  EXPECT_EQ(count_lines(log), 1 + 6);
  EXPECT_THROW(enhance(w.cfg, f, w.out, w.err), ConfigError);

  EnhanceFlags g = f;
  g.out = w.dir / "b";
  ASSERT_EQ(enhance(w.cfg, g, w.out, w.err), 0);
  EXPECT_EQ(slurp(g.out / "00002.wav"), slurp(f.out / "00002.wav"));
  EXPECT_EQ(slurp(g.out / "enhance.log"), log);

  // --n 1: a single candidate, nothing to select.
  EnhanceFlags one = f;
  one.in = noisy / "00001.wav";
  one.out = w.dir / "c";
  one.n = 1;
  ASSERT_EQ(enhance(w.cfg, one, w.out, w.err), 0);
  const std::string row = slurp(one.out / "enhance.log");
  EXPECT_NE(row.find("00001.wav\tok\t0\t"), std::string::npos);
  EXPECT_EQ(row.find(','), std::string::npos);

  // A malformed file fails alone; the rest of the batch is written.
  const fs::path bad = w.dir / "bad";
  fs::create_directories(bad);
  fs::copy_file(noisy / "00000.wav", bad / "good.wav");
  std::ofstream(bad / "broken.wav") << "RIFF0000WAVEjunk";
  EnhanceFlags b;
  b.in = bad;
  b.out = w.dir / "d";
  b.variant = VariantKind::kNar;
  EXPECT_EQ(enhance(w.cfg, b, w.out, w.err), 2);
  EXPECT_TRUE(fs::exists(b.out / "good.wav"));
  EXPECT_FALSE(fs::exists(b.out / "broken.wav"));
  EXPECT_NE(slurp(b.out / "enhance.log").find("broken.wav\terror"), std::string::npos);

  EnhanceFlags missing = f;
  missing.variant = VariantKind::kPrefix;
  missing.out = w.dir / "e";
  try {
    enhance(w.cfg, missing, w.out, w.err);
    FAIL() << "expected a DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("gense train-gen --variant prefix"), std::string::npos);
  }
}

TEST(Evaluate, ReportProbesAndMutant) {
  Workspace w("evaluate");
  w.trained({VariantKind::kAligned});
  EXPECT_EQ(evaluate(w.cfg, {}, w.out, w.err), 0);
  const fs::path dir = w.cfg.paths.reports / "evaluate" / "aligned";
  const auto report = eval::MetricReport::read((dir / "report.tsv").string());
  EXPECT_EQ(report.rows.size(), 6u);
  EXPECT_NE(slurp(dir / "latency.txt").find("35 ms"), std::string::npos);
  EXPECT_EQ(slurp(dir / "probes.tsv").find("FAIL"), std::string::npos);
  const std::string first = slurp(dir / "report.tsv");

  EvalFlags again;
  again.force = true;
  EXPECT_EQ(evaluate(w.cfg, again, w.out, w.err), 0);
  EXPECT_EQ(slurp(dir / "report.tsv"), first);

  EvalFlags mutant;
  mutant.force = true;
  mutant.inject_mutant = true;
  EXPECT_EQ(evaluate(w.cfg, mutant, w.out, w.err), 1);
  EXPECT_NE(slurp(dir / "probes.tsv").find("codec_encoder(mutant)"), std::string::npos);
}

TEST(Evaluate, MismatchedManifestIsDataError) {
  Workspace w("evaluate_manifest");
  w.trained({VariantKind::kAligned});
  const fs::path m = w.cfg.paths.corpus / "manifest.tsv";
  std::ofstream(m, std::ios::app) << "clean/00000.wav\tnoisy/missing.wav\t1.0\t-25.0\t7\n";
  try {
    evaluate(w.cfg, {}, w.out, w.err);
    FAIL() << "expected a data error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ExitCode::kData);
  }
}

TEST(Ablate, FourVariantTableIsDeterministic) {
  Workspace w("ablate");
  ASSERT_EQ(synth_data(w.cfg, false, w.out), 0);
  ASSERT_EQ(train_codec(w.cfg, {}, w.out), 0);
  EXPECT_EQ(ablate_cmd(w.cfg, {}, w.out, w.err), 0);
  const fs::path dir = w.cfg.paths.reports / "ablation";
  const std::string table = slurp(dir / "ablation.tsv");
  EXPECT_EQ(count_lines(table), 5);
  for (const char* v : {"\naligned\t", "\nprefix\t", "\nnar\t", "\nmask\t"}) EXPECT_NE(table.find(v), std::string::npos);
  EXPECT_THROW(ablate_cmd(w.cfg, {}, w.out, w.err), ConfigError);
  EvalFlags again;
  again.force = true;
  EXPECT_EQ(ablate_cmd(w.cfg, again, w.out, w.err), 0);
  EXPECT_EQ(slurp(dir / "ablation.tsv"), table);

  RunConfig from_ckpt = w.cfg;
  from_ckpt.ablation.source = "checkpoints";
  try {
    ablate_cmd(from_ckpt, again, w.out, w.err);
    FAIL() << "expected a DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("gense train-gen --variant aligned"), std::string::npos);
  }
}

// The executable maps error classes to exit codes.
TEST(Executable, ExitCodes) {
  Workspace w("exe");
  const std::string exe = GENSE_CLI_PATH;
  const std::string cfg = (w.dir / "tiny.ini").string();
  auto run = [&](const std::string& args) {
    const int status = std::system((exe + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  EXPECT_EQ(run("synth-data --config " + cfg), 0);
  EXPECT_EQ(run("synth-data --config " + cfg), 1);
  EXPECT_EQ(run("train-gen --variant aligned --config " + cfg), 2);
  EXPECT_EQ(run("train-gen --variant bogus --config " + cfg), 1);
  EXPECT_EQ(run("train-codec --config " + (w.dir / "absent.ini").string()), 2);
  EXPECT_EQ(run("frobnicate"), 1);
  std::ofstream(w.dir / "bad.ini") << "[training]\nsteps = many\n";
  EXPECT_EQ(run("train-codec --config " + (w.dir / "bad.ini").string()), 1);
}

}  // namespace
}  // namespace gense::cli
