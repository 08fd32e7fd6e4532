// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mixadc/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace mixadc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parsed scenario file: geometry, sources, noise level, resolved placement,
/// and threshold generator parameters.
struct ScenarioFile {
    ArrayConfig config;
    SourceScenario scenario;
    double sigma = 1.0;
    Placement placement;
    std::string placement_mode;  // "edges", "front", "middle", "explicit"
    double threshold_p_o = 0.0;  // 0 means use the analytic default power
    std::uint64_t threshold_seed = 0;
    bool has_threshold_seed = false;
};

/// Builds the delta vector for the named mode: "edges" (even split around
/// both ends), "front" (leading block), "middle" (centered block), or
/// "explicit" (delta supplied verbatim).
Placement make_placement(const std::string& mode, int num_elements, int num_high,
                         const std::vector<bool>& delta = {});

ScenarioFile parse_scenario(const std::string& json_text);
ScenarioFile load_scenario(const std::string& path);
std::string scenario_to_json(const ScenarioFile& file);

/// Columnar export: row, snapshot, re, im, kind in {high, onebit}. Row and
/// snapshot indices are 1-based. Floats carry 12 significant digits.
void write_observation_csv(std::ostream& out, const MixedObservation& observation);
MixedObservation read_observation_csv(std::istream& in, const Placement& placement,
                                      const ThresholdMatrix& thresholds);

/// Shortest-round-trip style formatting at 12 significant digits.
std::string format_double(double value);

}  // namespace mixadc
