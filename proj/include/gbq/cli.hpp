#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gbq/config.hpp"
#include "gbq/figures.hpp"

namespace gbq {

/// Commands: validate, snapshot, qoi, sweep, fit, reproduce-figure.
/// Computes every artifact in memory; nothing is written on failure.
ArtifactBundle run_command(const Config& cfg, std::ostream& log);

/// Writes the bundle and manifest.json (file list, roles, config hash) into `out_dir`.
void commit_bundle(const ArtifactBundle& b, const std::string& out_dir, const std::string& config_hash);

/// One-line JSON error report, as printed on stderr.
std::string error_json(const std::exception& e);

/// Entry point of the `gbq` binary. Exit 0 on success, 2 for config and
/// usage errors, 1 for any other failure.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace gbq
