// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mixadc/array_model.hpp"
#include "mixadc/types.hpp"

#include <vector>

namespace mixadc {

struct NonFinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientPeaks : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Uniform dictionary over the electrical-angle domain [-pi, pi).
struct AngularGrid {
    Vec omegas;      // K_w points
    CMat steering;   // M x K_w dictionary
    double spacing = 0.0;

    int size() const { return static_cast<int>(omegas.size()); }

    static AngularGrid build(const ArrayConfig& config, int grid_mult = 10);
};

struct TargetEstimate {
    double omega = 0.0;
    CVec waveform;  // s_k, length N

    double power() const { return waveform.squaredNorm() / waveform.size(); }
    double theta_deg() const { return std::asin(omega / kPi) * 180.0 / kPi; }
};

/// Exact mixed-ADC negative log-likelihood at the given targets, including
/// the M0 N ln(sigma^2) + M0 N ln(pi) constants.
double neg_log_likelihood(const ArrayConfig& config,
                          const std::vector<TargetEstimate>& targets, double sigma,
                          const MixedObservation& observation);

/// Analytic gradient in the ordering [omega_1..K, Re s_1.., Im s_1.., sigma],
/// waveforms stacked target-major.
Vec nll_gradient(const ArrayConfig& config, const std::vector<TargetEstimate>& targets,
                 double sigma, const MixedObservation& observation);

struct SlimOptions {
    double q = 0.0;           // sparsity exponent, q -> 0 uses ln ||b_r||^2
    double eps_outer = 1e-6;  // relative P-hat change, outer MM loop
    double eps_inner = 1e-4;  // relative P-hat change, inner cyclic loop
    int max_outer = 50;
    int max_inner = 50;
};

struct SlimResult {
    CMat s_hat;                     // K_w x N scaled back by zeta
    double sigma_hat = 0.0;
    Vec spectrum;                   // p_r = ||s_r||^(2-q) / N
    std::vector<double> objective;  // value per outer iteration
    int outer_iterations = 0;
    // Consistency diagnostics at the final iterate: the scale update must be
    // a root of v z^2 + u z - 2 M0 N and the signal update must satisfy its
    // normal equations.
    double zeta_root_residual = 0.0;
    double b_stationarity_residual = 0.0;
};

/// Grid-based sparse estimation via MM with inner cyclic zeta/B updates.
SlimResult slim(const ArrayConfig& config, const MixedObservation& observation,
                const AngularGrid& grid, const SlimOptions& options = {});

/// Indices of the K largest strict local maxima (ties to the lower index);
/// falls back to the K largest values when fewer maxima exist.
std::vector<int> peak_pick(const Vec& spectrum, int k);

struct RelaxOptions {
    double eps = 1e-6;   // relative NLL change across outer cycles
    int max_cycles = 50;
};

struct RelaxResult {
    std::vector<TargetEstimate> targets;
    double sigma = 0.0;
    double neg_log_lik = 0.0;
    int cycles = 0;
};

/// Cyclic per-target refinement of the exact likelihood; omega constrained to
/// a window of half-width grid_spacing/2 re-centered on the current estimate
/// each cycle. Sigma is refreshed together with the first target.
RelaxResult relax_refine(const ArrayConfig& config,
                         const std::vector<TargetEstimate>& initial,
                         double sigma_initial, const MixedObservation& observation,
                         double grid_spacing, const RelaxOptions& options = {});

/// mBIC(K) = 2 * neg_log_lik + (2KN + 3K) ln(MN).
double mbic(double neg_log_lik, int k, int num_elements, int num_snapshots);

struct ModelSelection {
    struct Candidate {
        int k = 0;
        double neg_log_lik = 0.0;
        double mbic_value = 0.0;
        std::vector<TargetEstimate> targets;
        double sigma = 0.0;
        bool noise_only_extension = false;  // the K = 0 hypothesis
    };
    std::vector<Candidate> candidates;
    int chosen_k = 0;
    Vec spectrum;              // coarse grid spectrum the candidates started from
    double sigma_hat_slim = 0.0;
};

/// Runs SLIM once, then RELAX for each K = 0..K_max, selecting K by mBIC.
ModelSelection slim_relax_mbic(const ArrayConfig& config,
                               const MixedObservation& observation,
                               const AngularGrid& grid, int k_max,
                               const SlimOptions& slim_options = {},
                               const RelaxOptions& relax_options = {});

}  // namespace mixadc
