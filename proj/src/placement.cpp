// SPDX-License-Identifier: Apache-2.0
#include "mixadc/placement.hpp"

#include "mixadc/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mixadc {

namespace {

double score_of(const Placement& p) { return placement_score(p.coefficients()); }

std::vector<int> high_indices(const Placement& p) { return p.high_rows(); }

Placement mirrored(const Placement& p) {
    Placement m = p;
    std::reverse(m.high_precision.begin(), m.high_precision.end());
    return m;
}

// Prefer the variant whose sorted high-precision index list is
// lexicographically smallest; edge-even ties (even/odd M0) need a
// deterministic answer.
Placement canonicalize(const Placement& p) {
    const Placement m = mirrored(p);
    return high_indices(m) < high_indices(p) ? m : p;
}

int first_low(const Placement& p) {
    for (int i = 0; i < p.size(); ++i)
        if (!p.high_precision[i]) return i;
    return -1;
}
int last_low(const Placement& p) {
    for (int i = p.size() - 1; i >= 0; --i)
        if (!p.high_precision[i]) return i;
    return -1;
}

}  // namespace

PlacementSolution optimal_edge_placement(int num_elements, int num_high) {
    if (num_elements < 1 || num_high < 0 || num_high > num_elements)
        throw std::invalid_argument("optimal_edge_placement: need 0 <= M0 <= M");
    const int front = (num_high + 1) / 2;  // M_h
    const int back = num_high - front;
    Placement p = Placement::all_onebit(num_elements);
    for (int i = 0; i < front; ++i) p.high_precision[i] = true;
    for (int i = 0; i < back; ++i) p.high_precision[num_elements - 1 - i] = true;
    return {p, score_of(p), "edges-closed-form"};
}

PlacementSolution swap_optimize(const Placement& initial) {
    initial.validate();
    Placement p = initial;
    double score = score_of(p);
    const int m_total = p.size();

    const int num_high = p.num_high();
    const int m_h = (num_high + 1) / 2;

    bool changed = true;
    int guard = m_total * m_total + 4;
    while (changed && guard-- > 0) {
        changed = false;

        // Situation 1: leftmost one-bit pair within the front edge zone swaps
        // with the nearest high-precision pair to its right.
        const int m1 = first_low(p);
        if (m1 >= 0 && m1 + 1 <= m_h) {
            int n1 = -1;
            for (int i = m1 + 1; i < m_total; ++i)
                if (p.high_precision[i]) {
                    n1 = i;
                    break;
                }
            if (n1 >= 0) {
                Placement cand = p;
                std::swap(cand.high_precision[m1], cand.high_precision[n1]);
                const double cand_score = score_of(cand);
                if (cand_score > score) {
                    p = std::move(cand);
                    score = cand_score;
                    changed = true;
                    continue;
                }
            }
        }

        // Situation 2: mirror case at the back edge.
        const int m2 = last_low(p);
        if (m2 >= 0 && m2 + 1 >= m_total - m_h + 1) {
            int n2 = -1;
            for (int i = m2 - 1; i >= 0; --i)
                if (p.high_precision[i]) {
                    n2 = i;
                    break;
                }
            if (n2 >= 0) {
                Placement cand = p;
                std::swap(cand.high_precision[m2], cand.high_precision[n2]);
                const double cand_score = score_of(cand);
                if (cand_score > score) {
                    p = std::move(cand);
                    score = cand_score;
                    changed = true;
                }
            }
        }
    }

    Placement canon = canonicalize(p);
    return {canon, score_of(canon), "swap"};
}

PlacementSolution exhaustive_oracle(int num_elements, int num_high, double rho_low,
                                    double rho_high) {
    if (num_high < 0 || num_high > num_elements)
        throw std::invalid_argument("exhaustive_oracle: need 0 <= M0 <= M");
    double combos = 1.0;
    for (int i = 0; i < num_high; ++i)
        combos *= static_cast<double>(num_elements - i) / (i + 1);
    if (combos > 1e6)
        throw TooLarge("exhaustive_oracle: combination count exceeds 1e6 budget");

    std::vector<bool> mask(num_elements, false);
    std::fill(mask.begin(), mask.begin() + num_high, true);
    // std::prev_permutation on a descending-sorted mask walks index sets in
    // lexicographic order, so strict improvement keeps the first maximizer.
    std::sort(mask.begin(), mask.end(), std::greater<bool>());

    Placement best;
    double best_score = -1.0;
    do {
        Placement cand{mask, rho_high, rho_low};
        const double s = score_of(cand);
        if (s > best_score) {
            best_score = s;
            best = cand;
        }
    } while (std::prev_permutation(mask.begin(), mask.end()));

    return {best, best_score, "exhaustive"};
}

PlacementSolution two_precision_optimize(int num_elements, int num_low_precision,
                                         int num_high_precision, double rho_p,
                                         double rho_q) {
    if (num_low_precision + num_high_precision != num_elements)
        throw std::invalid_argument("two_precision_optimize: counts must sum to M");
    if (rho_p > rho_q)
        throw std::invalid_argument("two_precision_optimize: need rho_p <= rho_q");

    PlacementSolution edge = optimal_edge_placement(num_elements, num_high_precision);
    edge.placement.rho_low = rho_p;
    edge.placement.rho_high = rho_q;
    edge.score = score_of(edge.placement);
    if (rho_p == rho_q)  // every placement scores identically
        return edge;

    // Start from a front block and let the swap procedure find the optimum.
    Placement initial = Placement::all_onebit(num_elements);
    initial.rho_low = rho_p;
    initial.rho_high = rho_q;
    for (int i = 0; i < num_high_precision; ++i) initial.high_precision[i] = true;
    return swap_optimize(initial);
}

std::vector<EfficiencyRow> performance_efficiency(int num_elements,
                                                  const std::vector<int>& num_high_values,
                                                  double snr_db, int num_snapshots,
                                                  EfficiencyMode mode) {
    const double snr = std::pow(10.0, snr_db / 10.0);
    std::vector<EfficiencyRow> rows;
    rows.reserve(num_high_values.size());

    double crb_hp = 0.0;
    ArrayConfig config{num_elements, 0.5};
    SourceScenario scenario;
    CMat a, a_dot, s;
    ThresholdMatrix thresholds;
    double sigma = 0.0;
    ParamLayout layout;

    if (mode == EfficiencyMode::Asymptotic) {
        crb_hp = asymptotic_crb_all_high(num_elements, num_snapshots, snr);
    } else {
        scenario.angles_deg = Vec::Constant(1, 10.0);
        scenario.powers = Vec::Constant(1, 1.0);
        scenario.num_snapshots = num_snapshots;
        sigma = std::sqrt(scenario.powers[0] / snr);
        a = steering_matrix(config, scenario.omegas());
        a_dot = steering_derivative(config, scenario.omegas());
        s = synthesize_snapshots(config, scenario, 0.0, SeedStream(0)).s;
        thresholds = generate_thresholds(config, num_snapshots,
                                         default_threshold_power(scenario, sigma),
                                         SeedStream(0x9d1cada5u));
        layout = ParamLayout{1, num_snapshots, false};
        const FisherMatrix f_hp =
            fim_mixed(a, a_dot, s, thresholds.entries, sigma,
                      Placement::all_high(num_elements), layout);
        crb_hp = crb_from_fim(f_hp).doa_variances[0];
    }

    for (int m0 : num_high_values) {
        const PlacementSolution sol = optimal_edge_placement(num_elements, m0);
        double crb_k = 0.0;
        if (mode == EfficiencyMode::Asymptotic) {
            if (m0 == num_elements) {  // all-high is the reference itself
                rows.push_back({m0, 1.0, 1.0});
                continue;
            }
            const Vec g = sol.placement.coefficients();
            crb_k = g.sum() / (2.0 * num_snapshots * sol.score * snr);
        } else {
            const FisherMatrix f = fim_mixed(a, a_dot, s, thresholds.entries, sigma,
                                             sol.placement, layout);
            crb_k = crb_from_fim(f).doa_variances[0];
        }
        rows.push_back({m0, static_cast<double>(m0) / num_elements, crb_hp / crb_k});
    }
    return rows;
}

}  // namespace mixadc
