#pragma once

#include <string>

#include "spdcq/types.hpp"

namespace spdcq {

/// Raised for malformed datasets; the message carries file and location
/// context (manifest path, JSON pointer, blob path and byte counts).
class ParseError : public DataError {
public:
    using DataError::DataError;
};

struct WriteOptions {
    // Arrays with at most this many complex values are inlined into the
    // manifest as [re, im] pairs; larger ones go to sibling .bin blobs
    // (little-endian complex float64, row-major, last index fastest).
    std::size_t inline_threshold = 4096;
};

/// Reads a dataset manifest (JSON, format_version 1) plus its blobs and
/// returns a validated Scenario. Unknown format versions, unresolved or
/// short blobs, shape mismatches and non-finite values raise ParseError.
Scenario read_scenario(const std::string& path);

/// Writes manifest + blobs. Output bytes are a pure function of the scenario
/// content: stable key order, round-trip float formatting, deterministic
/// blob names derived from the manifest stem.
void write_scenario(const Scenario& scenario, const std::string& path,
                    const WriteOptions& options = {});

/// Dataset summary (modes, eigenfrequencies, Q factors, grid, volume) as a
/// JSON string; the CLI `inspect` subcommand prints or tabulates it.
std::string scenario_info_json(const Scenario& scenario);

}  // namespace spdcq
