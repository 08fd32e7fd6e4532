// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace mixadc {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
// Fisher-information coefficient of an ideal one-bit ADC pair.
inline constexpr double kOneBitCoeff = 2.0 / std::numbers::pi;

/// Geometry of the uniform linear array.
struct ArrayConfig {
    int num_elements = 0;           // M
    double spacing_ratio = 0.5;     // d / lambda

    void validate() const {
        if (num_elements < 1)
            throw std::invalid_argument("ArrayConfig: num_elements must be >= 1");
        if (!(spacing_ratio > 0.0))
            throw std::invalid_argument("ArrayConfig: spacing_ratio must be > 0");
    }
};

/// Far-field sources: angles in degrees, per-source powers, snapshot count.
struct SourceScenario {
    Vec angles_deg;
    Vec powers;
    int num_snapshots = 0;          // N

    int num_sources() const { return static_cast<int>(angles_deg.size()); }

    /// Electrical angles omega_k = pi * sin(theta_k).
    Vec omegas() const {
        Vec w(angles_deg.size());
        for (Eigen::Index k = 0; k < angles_deg.size(); ++k)
            w[k] = kPi * std::sin(angles_deg[k] * kPi / 180.0);
        return w;
    }

    void validate() const {
        if (angles_deg.size() < 1)
            throw std::invalid_argument("SourceScenario: need at least one source");
        if (powers.size() != angles_deg.size())
            throw std::invalid_argument("SourceScenario: powers/angles size mismatch");
        if (num_snapshots < 1)
            throw std::invalid_argument("SourceScenario: num_snapshots must be >= 1");
        for (Eigen::Index k = 0; k < angles_deg.size(); ++k) {
            if (!(angles_deg[k] > -90.0 && angles_deg[k] < 90.0))
                throw std::invalid_argument("SourceScenario: angle outside (-90, 90)");
            if (!(powers[k] > 0.0))
                throw std::invalid_argument("SourceScenario: powers must be > 0");
            for (Eigen::Index j = k + 1; j < angles_deg.size(); ++j)
                if (angles_deg[k] == angles_deg[j])
                    throw std::invalid_argument("SourceScenario: angles must be distinct");
        }
    }
};

/// Per-antenna ADC precision assignment (delta) with precision coefficients g.
struct Placement {
    std::vector<bool> high_precision;   // delta_i, true = high-precision pair
    double rho_high = 1.0;
    double rho_low = kOneBitCoeff;

    int size() const { return static_cast<int>(high_precision.size()); }

    int num_high() const {
        int c = 0;
        for (bool b : high_precision) c += b ? 1 : 0;
        return c;
    }
    int num_onebit() const { return size() - num_high(); }

    Vec coefficients() const {
        Vec g(size());
        for (int i = 0; i < size(); ++i)
            g[i] = high_precision[i] ? rho_high : rho_low;
        return g;
    }

    std::vector<int> high_rows() const {
        std::vector<int> r;
        for (int i = 0; i < size(); ++i)
            if (high_precision[i]) r.push_back(i);
        return r;
    }
    std::vector<int> onebit_rows() const {
        std::vector<int> r;
        for (int i = 0; i < size(); ++i)
            if (!high_precision[i]) r.push_back(i);
        return r;
    }

    static Placement all_high(int m) { return Placement{std::vector<bool>(m, true)}; }
    static Placement all_onebit(int m) { return Placement{std::vector<bool>(m, false)}; }

    void validate() const {
        if (size() < 1)
            throw std::invalid_argument("Placement: empty array");
        if (!(rho_low < rho_high && rho_high <= 1.0 && rho_low > 0.0))
            throw std::invalid_argument("Placement: need 0 < rho_low < rho_high <= 1");
    }
};

/// Known antenna-varying one-bit comparison levels.
struct ThresholdMatrix {
    CMat entries;       // M x N
    double p_o = 0.0;   // generator parameter (average received power)
};

/// Jointly held high-precision samples and one-bit sign samples.
struct MixedObservation {
    CMat y_high;        // M0 x N, verbatim rows of X
    CMat y_onebit;      // M1 x N, entries in {+-1 +- i}
    Placement placement;
    ThresholdMatrix thresholds;

    int num_snapshots() const { return static_cast<int>(std::max(y_high.cols(), y_onebit.cols())); }
};

}  // namespace mixadc
