// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mixadc/rng.hpp"
#include "mixadc/types.hpp"

namespace mixadc {

/// Steering matrix: entry (m, k) = exp(i * 2 * d/lambda * m * omega_k),
/// m = 0..M-1 (element 1 is the phase reference).
CMat steering_matrix(const ArrayConfig& config, const Vec& omegas);

struct Snapshots {
    CMat x;  // M x N received matrix A*S + E
    CMat s;  // K x N signal matrix
};

/// Deterministic waveforms s_k(n) = sqrt(p_k/2)(1+i); optionally random-phase.
/// Noise is i.i.d. circular complex Gaussian with variance sigma^2.
Snapshots synthesize_snapshots(const ArrayConfig& config, const SourceScenario& scenario,
                               double sigma, const SeedStream& seed,
                               bool random_phase = false);

/// Real and imaginary parts drawn uniformly from the eight-element grid
/// {-h, -h + h/7 * 2, ..., h} with h = sqrt(p_o).
ThresholdMatrix generate_thresholds(const ArrayConfig& config, int num_snapshots,
                                    double p_o, const SeedStream& seed);

/// The analytically known average received power, used as the default p_o.
double default_threshold_power(const SourceScenario& scenario, double sigma);

/// Z = sign(Re(X - H)) + i sign(Im(X - H)), with sign(0) = +1.
CMat one_bit_quantize(const CMat& x, const CMat& h);

/// Partition rows: delta rows of X verbatim, the rest as their quantized signs.
MixedObservation mixed_sample(const CMat& x, const CMat& z, const Placement& placement,
                              const ThresholdMatrix& thresholds);

/// Per-source SNR in dB: 10 log10(sum_n |s_k(n)|^2 / (N sigma^2)).
Vec snr_db(const CMat& s, double sigma);

}  // namespace mixadc
