#pragma once

#include "vrisim/config.hpp"

#include <string>

namespace vrisim {

/// Dispatches the configured experiment and writes its data files plus a
/// manifest under cfg.out_dir. Files are written with a ".partial" suffix and
/// renamed on completion; the manifest is written last, so an interrupted run
/// leaves partial files and no manifest. pes-info prints JSON to stdout and
/// writes nothing. Throws on any failure.
void run(const RunConfig& cfg);

/// The pes-info JSON document (also what the pes-info experiment prints).
std::string pes_info_json(const RunConfig& cfg);

}  // namespace vrisim
