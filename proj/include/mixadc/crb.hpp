// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mixadc/array_model.hpp"
#include "mixadc/special.hpp"
#include "mixadc/types.hpp"

namespace mixadc {

struct SingularFim : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateArray : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ordering of the real parameter vector: [omega_1..omega_K, Re vec(S),
/// Im vec(S), sigma (if unknown)], with vec(S) column-major over (k, n).
struct ParamLayout {
    int num_sources = 0;    // K
    int num_snapshots = 0;  // N
    bool noise_known = true;

    int dim() const {
        return num_sources + 2 * num_sources * num_snapshots + (noise_known ? 0 : 1);
    }
};

/// Real symmetric information matrix over the parameter vector.
struct FisherMatrix {
    Mat entries;
    ParamLayout layout;
};

/// Rows-of-parameters by MN sensitivity matrix [Delta, G, iG]^H, with an
/// extra zeta/sigma row when the noise level is unknown.
struct UMatrix {
    CMat u;
    ParamLayout layout;
};

/// Diagonal one-bit information weights; real and imaginary parts in (0, 4].
struct LambdaWeights {
    CVec lambda;  // length MN
};

struct CrbReport {
    Mat matrix;            // full CRB, dim x dim
    Mat doa_block;         // K x K, in omega^2 units
    Vec doa_variances;     // diagonal of doa_block
    double condition_number = 0.0;
    ParamLayout layout;
};

/// Entry (m, k) = i * 2 * d/lambda * m * exp(i * 2 * d/lambda * m * omega_k).
CMat steering_derivative(const ArrayConfig& config, const Vec& omegas);

/// Assemble U = [Delta, G, iG]^H with Delta = S^T (Khatri-Rao) Adot and
/// G = I_N kron A. When layout.noise_known is false, thresholds and sigma
/// must be supplied and the row zeta^T / sigma is appended, zeta = vec(AS - H).
UMatrix build_u(const CMat& a, const CMat& a_dot, const CMat& s, const ParamLayout& layout,
                const CMat* thresholds = nullptr, double sigma = 0.0);

/// F0 = (2/sigma^2) Re{U U^H}; unknown noise appends the 4NM/sigma^2 corner.
FisherMatrix fim_high_precision(const UMatrix& u, double sigma, int num_elements);

/// Per-element weights lambda_k = B(Re zeta_k / (sigma/sqrt 2)) + i B(Im ...),
/// zeta = vec(AS - H).
LambdaWeights lambda_weights(const CMat& a, const CMat& s, const CMat& thresholds,
                             double sigma);

/// F1 = (1/(pi sigma^2)) (U_R Lambda_R U_R^T + U_I Lambda_I U_I^T).
FisherMatrix fim_one_bit(const UMatrix& u, const LambdaWeights& weights, double sigma);

/// F_m: high-precision term on delta-selected columns plus one-bit term on the
/// complement, known- or unknown-noise per the layout.
FisherMatrix fim_mixed(const CMat& a, const CMat& a_dot, const CMat& s,
                       const CMat& thresholds, double sigma, const Placement& placement,
                       const ParamLayout& layout);

/// Inverse via eigendecomposition; throws SingularFim when the smallest
/// eigenvalue is below 1e-12 times the largest. No silent regularization.
CrbReport crb_from_fim(const FisherMatrix& f);

/// CRB_L(omega) = (sigma^2 / 2N) Re{(Adot^H Omega Adot) .* P_hat^T}^{-1},
/// Omega = Sigma0 - Sigma0 A (A^H Sigma0 A)^{-1} A^H Sigma0 and
/// Sigma0 = (1 - 2/pi) diag(delta) + (2/pi) I.
Mat crb_lower_bound_doa(const CMat& a, const CMat& a_dot, const CMat& p_hat,
                        const Placement& placement, double sigma, int num_snapshots);

/// Sample signal covariance P_hat = (1/N) sum_n s(n) s(n)^H.
CMat signal_covariance(const CMat& s);

/// Placement score via the moment form
/// S = sum g_i (i-1)^2 * sum g_i - (sum g_i (i-1))^2.
double placement_score(const Vec& g);

/// The same score via Lagrange's identity: sum_{i<j} g_i g_j (j-i)^2.
double placement_score_pairwise(const Vec& g);

/// Per-target asymptotic CRB (sum_i g_i) / (2 N S) / SNR_k. Throws
/// DegenerateArray for M < 2.
Vec asymptotic_crb(const Placement& placement, const Vec& snrs_linear, int num_snapshots);

/// Closed forms for the all-high and all-one-bit arrays.
double asymptotic_crb_all_high(int num_elements, int num_snapshots, double snr_linear);
double asymptotic_crb_all_onebit(int num_elements, int num_snapshots, double snr_linear);

/// Convert a variance in omega^2 (electrical radians squared) to theta degrees
/// squared via the Jacobian (pi cos theta)^2.
double omega_var_to_theta_deg_var(double var_omega, double theta_deg);

}  // namespace mixadc
