// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mixadc/scenario_io.hpp"
#include "mixadc/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mixadc {

struct EmptyCell : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NamedPlacement {
    std::string label;
    Placement placement;
};

struct ExperimentSpec {
    ArrayConfig config;
    SourceScenario scenario;
    std::vector<double> snr_sweep_db;
    std::vector<NamedPlacement> placements;
    int trials = 1;
    std::uint64_t master_seed = 0;
    bool use_relax = true;             // false runs plain grid SLIM
    bool redraw_thresholds = true;     // fresh H per trial; false fixes it per cell
    bool censor = false;               // drop misses beyond 3 grid cells
    int grid_mult = 10;
    double threshold_p_o = 0.0;        // 0 means analytic default power
    int num_threads = 1;

    void validate() const;
};

struct ResultRow {
    double snr_db = 0.0;
    std::string placement_label;
    int trial = 0;
    int target_index = 0;  // 1-based
    double omega_true = 0.0;
    double omega_hat = 0.0;
    double squared_error = 0.0;
    double crb_exact = 0.0;
    double crb_lower = 0.0;
    double crb_asymptotic = 0.0;
    double runtime_ms = 0.0;
    int k_hat = 0;
    std::string error;  // empty on success
};

struct AggregateRow {
    std::string placement_label;
    double snr_db = 0.0;
    int target_index = 0;
    double mse_db = 0.0;
    double mean_crb_db = 0.0;
    int trials_used = 0;
};

/// Runs the full (placement x snr x trial) sweep. Rows come back in that
/// deterministic order regardless of worker scheduling; per-trial failures
/// yield rows with a non-empty error tag instead of aborting.
std::vector<ResultRow> run_monte_carlo(const ExperimentSpec& spec);

/// Mean squared omega error and mean exact CRB per (placement, snr) cell for
/// one target index, both in dB. Throws EmptyCell on a cell without successes.
std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows,
                                    int target_index = 1);

void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_aggregates_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
std::string rows_to_json(const std::vector<ResultRow>& rows);
std::string aggregates_to_json(const std::vector<AggregateRow>& rows);

/// Sidecar describing the run: the full spec, seeds, and the source revision.
std::string metadata_json(const ExperimentSpec& spec);

/// Noise level realizing the requested per-first-target SNR in dB.
double sigma_for_snr_db(const SourceScenario& scenario, double snr_db);

/// Greedy nearest-omega assignment of estimates to true targets; returns for
/// each true target the index of the matched estimate or -1 when exhausted.
std::vector<int> match_targets(const Vec& omega_true, const Vec& omega_hat);

}  // namespace mixadc
