// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gense/error.hpp"

namespace gense {

struct LoopOptions {
  int64_t steps = 1000;        // total optimizer steps
  int64_t log_every = 50;      // loss-log row interval
  int64_t checkpoint_every = 200;
};

// Rewrites a tab-separated log so it holds the header plus rows whose first
// field (the step) is <= last_step. Resumed runs then append exactly the rows
// an uninterrupted run would have written.
inline void truncate_log(const std::filesystem::path& path, const std::string& header, int64_t last_step) {
  std::vector<std::string> keep = {header};
  std::ifstream in(path);
  std::string line;
  bool first = true;
  while (in && std::getline(in, line)) {
    if (first) {
      first = false;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    try {
      if (std::stoll(line.substr(0, tab)) <= last_step) keep.push_back(line);
    } catch (const std::logic_error&) {
      throw DataError("malformed row in loss log " + path.string() + ": " + line);
    }
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write loss log " + path.string());
  for (const auto& l : keep) out << l << "\n";
}

// Drives `step()` from the current step count to opt.steps. `step` performs
// one update and returns the tab-separated loss fields for that step;
// `heldout` returns fields appended to each log row; `save` writes a
// checkpoint. Logged steps are 1-based counts of completed updates.
struct TrainingLoop {
  LoopOptions opt;
  std::function<int64_t()> steps_done;
  std::function<std::string()> step;
  std::function<std::string()> heldout;
  std::function<void()> save;

  void run(std::ostream& log, std::ostream* progress = nullptr) const {
    while (steps_done() < opt.steps) {
      const std::string fields = step();
      const int64_t s = steps_done();
      const bool last = s == opt.steps;
      // Rows only at interval multiples, so a resumed run writes the same log.
      if (opt.log_every > 0 && s % opt.log_every == 0) {
        const std::string row = std::to_string(s) + "\t" + fields + (heldout ? "\t" + heldout() : std::string());
        log << row << "\n" << std::flush;
        if (progress) *progress << row << "\n" << std::flush;
      }
      if (save && ((opt.checkpoint_every > 0 && s % opt.checkpoint_every == 0) || last)) save();
    }
  }
};

}  // namespace gense
