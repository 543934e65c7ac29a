// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cgfuzz/config.hpp"

namespace cgfuzz {

// Subcommand entry points. Each returns a process exit code:
// 0 clean, 1 bugs found (fuzz/replay/sweep), 2 infrastructure fault.
int cmd_corpus_gen(const Config& cfg);
int cmd_extract(const Config& cfg);
int cmd_fuzz(const Config& cfg);
int cmd_replay(const Config& cfg, const std::string& report_path);
int cmd_minimize(const Config& cfg, const std::string& report_path);
int cmd_mutant_sweep(const Config& cfg);
int cmd_report(const Config& cfg);

}  // namespace cgfuzz
