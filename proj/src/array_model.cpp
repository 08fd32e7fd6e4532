// SPDX-License-Identifier: Apache-2.0
#include "mixadc/array_model.hpp"

#include <cmath>

namespace mixadc {

CMat steering_matrix(const ArrayConfig& config, const Vec& omegas) {
    config.validate();
    const int m = config.num_elements;
    const auto k = omegas.size();
    CMat a(m, k);
    for (Eigen::Index col = 0; col < k; ++col) {
        const double phase_step = 2.0 * config.spacing_ratio * omegas[col];
        for (int row = 0; row < m; ++row)
            a(row, col) = std::polar(1.0, phase_step * row);
    }
    return a;
}

Snapshots synthesize_snapshots(const ArrayConfig& config, const SourceScenario& scenario,
                               double sigma, const SeedStream& seed, bool random_phase) {
    config.validate();
    scenario.validate();
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("synthesize_snapshots: sigma must be finite and >= 0");

    const int k = scenario.num_sources();
    const int n = scenario.num_snapshots;

    CMat s(k, n);
    if (random_phase) {
        auto eng = seed.fork("waveform").engine();
        std::uniform_real_distribution<double> unif(0.0, 2.0 * kPi);
        for (int kk = 0; kk < k; ++kk) {
            const double amp = std::sqrt(scenario.powers[kk]);
            for (int nn = 0; nn < n; ++nn)
                s(kk, nn) = std::polar(amp, unif(eng));
        }
    } else {
        for (int kk = 0; kk < k; ++kk) {
            const double part = std::sqrt(scenario.powers[kk] / 2.0);
            for (int nn = 0; nn < n; ++nn)
                s(kk, nn) = cplx(part, part);
        }
    }

    const CMat a = steering_matrix(config, scenario.omegas());
    CMat x = a * s;
    if (sigma > 0.0) {
        auto eng = seed.fork("noise").engine();
        std::normal_distribution<double> gauss(0.0, sigma / std::numbers::sqrt2);
        for (Eigen::Index col = 0; col < x.cols(); ++col)
            for (Eigen::Index row = 0; row < x.rows(); ++row)
                x(row, col) += cplx(gauss(eng), gauss(eng));
    }
    return {std::move(x), std::move(s)};
}

ThresholdMatrix generate_thresholds(const ArrayConfig& config, int num_snapshots,
                                    double p_o, const SeedStream& seed) {
    config.validate();
    if (!(p_o > 0.0))
        throw std::invalid_argument("generate_thresholds: p_o must be > 0");
    const double h_max = std::sqrt(p_o);
    const double step = h_max / 7.0;

    auto eng = seed.fork("thresholds").engine();
    std::uniform_int_distribution<int> pick(0, 7);
    CMat h(config.num_elements, num_snapshots);
    for (Eigen::Index col = 0; col < h.cols(); ++col)
        for (Eigen::Index row = 0; row < h.rows(); ++row)
            h(row, col) = cplx(-h_max + 2.0 * step * pick(eng),
                               -h_max + 2.0 * step * pick(eng));
    return {std::move(h), p_o};
}

double default_threshold_power(const SourceScenario& scenario, double sigma) {
    return scenario.powers.sum() + sigma * sigma;
}

CMat one_bit_quantize(const CMat& x, const CMat& h) {
    if (x.rows() != h.rows() || x.cols() != h.cols())
        throw std::invalid_argument("one_bit_quantize: shape mismatch");
    // sign(0) = +1
    return x.binaryExpr(h, [](cplx xi, cplx hi) {
        const cplx d = xi - hi;
        return cplx(d.real() >= 0.0 ? 1.0 : -1.0, d.imag() >= 0.0 ? 1.0 : -1.0);
    });
}

MixedObservation mixed_sample(const CMat& x, const CMat& z, const Placement& placement,
                              const ThresholdMatrix& thresholds) {
    placement.validate();
    if (x.rows() != placement.size() || z.rows() != placement.size() || x.cols() != z.cols())
        throw std::invalid_argument("mixed_sample: shape mismatch");

    const auto hi = placement.high_rows();
    const auto lo = placement.onebit_rows();
    MixedObservation obs;
    obs.y_high.resize(static_cast<Eigen::Index>(hi.size()), x.cols());
    obs.y_onebit.resize(static_cast<Eigen::Index>(lo.size()), x.cols());
    for (std::size_t i = 0; i < hi.size(); ++i) obs.y_high.row(i) = x.row(hi[i]);
    for (std::size_t i = 0; i < lo.size(); ++i) obs.y_onebit.row(i) = z.row(lo[i]);
    obs.placement = placement;
    obs.thresholds = thresholds;
    return obs;
}

Vec snr_db(const CMat& s, double sigma) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("snr_db: sigma must be > 0");
    const double n = static_cast<double>(s.cols());
    Vec out(s.rows());
    for (Eigen::Index k = 0; k < s.rows(); ++k)
        out[k] = 10.0 * std::log10(s.row(k).squaredNorm() / (n * sigma * sigma));
    return out;
}

}  // namespace mixadc
