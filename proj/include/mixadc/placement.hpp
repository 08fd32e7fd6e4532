// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mixadc/crb.hpp"
#include "mixadc/types.hpp"

#include <string>
#include <vector>

namespace mixadc {

struct TooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PlacementSolution {
    Placement placement;
    double score = 0.0;
    std::string method;  // "edges-closed-form", "swap", "exhaustive"
};

/// Edge-even placement: floor((M0+1)/2) high-precision pairs at the front,
/// the remainder at the back.
PlacementSolution optimal_edge_placement(int num_elements, int num_high);

/// Iteratively swap a boundary one-bit pair with the nearest inner
/// high-precision pair while the score strictly increases. Converges to the
/// edge-even optimum; the result is canonicalized against its mirror.
PlacementSolution swap_optimize(const Placement& initial);

/// Enumerates all C(M, M0) placements; throws TooLarge beyond 1e6
/// combinations. Ties broken lexicographically on the high-precision indices.
PlacementSolution exhaustive_oracle(int num_elements, int num_high,
                                    double rho_low = kOneBitCoeff, double rho_high = 1.0);

/// Two quantization precisions with coefficients rho_p < rho_q; the higher
/// precision class ends up evenly distributed around the edges.
PlacementSolution two_precision_optimize(int num_elements, int num_low_precision,
                                         int num_high_precision, double rho_p,
                                         double rho_q);

struct EfficiencyRow {
    int num_high = 0;
    double kappa = 0.0;
    double eta = 0.0;
};

enum class EfficiencyMode { Asymptotic, Exact };

/// Performance efficiency CRB_HP / CRB_kappa across edge-optimal placements.
/// Exact mode evaluates the unknown-noise CRB for a single target at 10 deg
/// with a fixed threshold draw.
std::vector<EfficiencyRow> performance_efficiency(int num_elements,
                                                  const std::vector<int>& num_high_values,
                                                  double snr_db, int num_snapshots,
                                                  EfficiencyMode mode);

}  // namespace mixadc
