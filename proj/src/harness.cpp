// SPDX-License-Identifier: Apache-2.0
#include "mixadc/harness.hpp"

#include "mixadc/array_model.hpp"
#include "mixadc/crb.hpp"
#include "mixadc/estimation.hpp"
#include "mixadc/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <limits>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

namespace mixadc {

using nlohmann::json;

void ExperimentSpec::validate() const {
    config.validate();
    scenario.validate();
    if (trials < 1)
        throw ConfigError("experiment: trials must be >= 1");
    if (snr_sweep_db.empty())
        throw ConfigError("experiment: empty snr sweep");
    if (placements.empty())
        throw ConfigError("experiment: no placements");
    for (const auto& np : placements) {
        np.placement.validate();
        if (np.placement.size() != config.num_elements)
            throw ConfigError("experiment: placement size mismatch for '" + np.label + "'");
    }
    if (grid_mult < 1)
        throw ConfigError("experiment: grid_mult must be >= 1");
    if (num_threads < 1)
        throw ConfigError("experiment: num_threads must be >= 1");
}

double sigma_for_snr_db(const SourceScenario& scenario, double snr_db) {
    return std::sqrt(scenario.powers[0] * std::pow(10.0, -snr_db / 10.0));
}

std::vector<int> match_targets(const Vec& omega_true, const Vec& omega_hat) {
    const int kt = static_cast<int>(omega_true.size());
    const int kh = static_cast<int>(omega_hat.size());
    std::vector<int> match(kt, -1);
    std::vector<bool> used(kh, false);
    for (int pass = 0; pass < std::min(kt, kh); ++pass) {
        double best = std::numeric_limits<double>::infinity();
        int bt = -1, bh = -1;
        for (int t = 0; t < kt; ++t) {
            if (match[t] >= 0) continue;
            for (int h = 0; h < kh; ++h) {
                if (used[h]) continue;
                const double d = std::abs(omega_true[t] - omega_hat[h]);
                if (d < best) {
                    best = d;
                    bt = t;
                    bh = h;
                }
            }
        }
        match[bt] = bh;
        used[bh] = true;
    }
    return match;
}

namespace {

struct TrialInputs {
    const ExperimentSpec* spec;
    const AngularGrid* grid;
    int placement_index, snr_index, trial;
};

std::vector<ResultRow> run_trial(const TrialInputs& in) {
    const ExperimentSpec& spec = *in.spec;
    const NamedPlacement& np = spec.placements[in.placement_index];
    const double snr = spec.snr_sweep_db[in.snr_index];
    const int k = spec.scenario.num_sources();
    const Vec omega_true = spec.scenario.omegas();

    std::vector<ResultRow> rows(k);
    for (int t = 0; t < k; ++t) {
        rows[t].snr_db = snr;
        rows[t].placement_label = np.label;
        rows[t].trial = in.trial;
        rows[t].target_index = t + 1;
        rows[t].omega_true = omega_true[t];
    }

    try {
        const SeedStream cell_seed = SeedStream(spec.master_seed)
                                         .fork(np.label)
                                         .fork(static_cast<std::uint64_t>(in.snr_index));
        const SeedStream trial_seed = cell_seed.fork(static_cast<std::uint64_t>(in.trial));

        const double sigma = sigma_for_snr_db(spec.scenario, snr);
        const Snapshots snaps =
            synthesize_snapshots(spec.config, spec.scenario, sigma, trial_seed);
        const double p_o = spec.threshold_p_o > 0.0
                               ? spec.threshold_p_o
                               : default_threshold_power(spec.scenario, sigma);
        const SeedStream h_seed =
            spec.redraw_thresholds ? trial_seed.fork("thresholds-trial")
                                   : cell_seed.fork("thresholds-fixed");
        const ThresholdMatrix thresholds =
            generate_thresholds(spec.config, spec.scenario.num_snapshots, p_o, h_seed);
        const CMat z = one_bit_quantize(snaps.x, thresholds.entries);
        const MixedObservation obs = mixed_sample(snaps.x, z, np.placement, thresholds);

        // Bounds for this realization.
        const CMat a = steering_matrix(spec.config, omega_true);
        const CMat a_dot = steering_derivative(spec.config, omega_true);
        const ParamLayout layout{k, spec.scenario.num_snapshots, false};
        Vec crb_exact = Vec::Constant(k, std::nan(""));
        try {
            const FisherMatrix fm = fim_mixed(a, a_dot, snaps.s, thresholds.entries,
                                              sigma, np.placement, layout);
            crb_exact = crb_from_fim(fm).doa_variances;
        } catch (const SingularFim&) {
            // leave NaN; the estimate is still recorded
        }
        const Mat crb_low =
            crb_lower_bound_doa(a, a_dot, signal_covariance(snaps.s), np.placement,
                                sigma, spec.scenario.num_snapshots);
        const Vec snrs_linear = spec.scenario.powers / (sigma * sigma);
        const Vec crb_asym =
            asymptotic_crb(np.placement, snrs_linear, spec.scenario.num_snapshots);

        const auto t0 = std::chrono::steady_clock::now();
        const SlimResult coarse = slim(spec.config, obs, *in.grid, SlimOptions{});
        Vec omega_hat(k);
        if (spec.use_relax) {
            const std::vector<int> picks = peak_pick(coarse.spectrum, k);
            std::vector<TargetEstimate> init;
            for (int idx : picks)
                init.push_back({in.grid->omegas[idx], coarse.s_hat.row(idx).transpose()});
            const double sigma0 = std::clamp(coarse.sigma_hat, 1e-6, 1e6);
            const RelaxResult refined =
                relax_refine(spec.config, init, sigma0, obs, in.grid->spacing);
            for (int t = 0; t < k; ++t) omega_hat[t] = refined.targets[t].omega;
        } else {
            const std::vector<int> picks = peak_pick(coarse.spectrum, k);
            for (int t = 0; t < k; ++t) omega_hat[t] = in.grid->omegas[picks[t]];
        }
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();

        const std::vector<int> match = match_targets(omega_true, omega_hat);
        for (int t = 0; t < k; ++t) {
            ResultRow& row = rows[t];
            row.runtime_ms = ms;
            row.k_hat = k;
            row.crb_exact = crb_exact[t];
            row.crb_lower = crb_low(t, t);
            row.crb_asymptotic = crb_asym[t];
            if (match[t] < 0) {
                row.error = "unmatched";
                continue;
            }
            row.omega_hat = omega_hat[match[t]];
            const double err = row.omega_hat - row.omega_true;
            row.squared_error = err * err;
            if (spec.censor && std::abs(err) > 3.0 * in.grid->spacing)
                row.error = "censored";
        }
    } catch (const std::exception& e) {
        for (ResultRow& row : rows) row.error = e.what();
    }
    return rows;
}

}  // namespace

std::vector<ResultRow> run_monte_carlo(const ExperimentSpec& spec) {
    spec.validate();
    const AngularGrid grid = AngularGrid::build(spec.config, spec.grid_mult);

    std::vector<TrialInputs> jobs;
    for (int p = 0; p < static_cast<int>(spec.placements.size()); ++p)
        for (int s = 0; s < static_cast<int>(spec.snr_sweep_db.size()); ++s)
            for (int t = 0; t < spec.trials; ++t)
                jobs.push_back({&spec, &grid, p, s, t});

    std::vector<std::vector<ResultRow>> slots(jobs.size());
    const int workers =
        std::min<int>(spec.num_threads, static_cast<int>(jobs.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) slots[i] = run_trial(jobs[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= jobs.size()) return;
                    slots[i] = run_trial(jobs[i]);
                }
            });
        for (auto& th : pool) th.join();
    }

    std::vector<ResultRow> rows;
    rows.reserve(jobs.size() * spec.scenario.num_sources());
    for (auto& slot : slots)
        for (auto& row : slot) rows.push_back(std::move(row));
    return rows;
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows, int target_index) {
    if (rows.empty())
        throw EmptyCell("aggregate: no rows");

    struct Cell {
        double sum_sq = 0.0, sum_crb = 0.0;
        int used = 0, seen = 0;
    };
    std::vector<std::pair<std::string, double>> order;
    std::map<std::pair<std::string, double>, Cell> cells;
    for (const ResultRow& row : rows) {
        if (row.target_index != target_index) continue;
        const auto key = std::make_pair(row.placement_label, row.snr_db);
        if (!cells.count(key)) order.push_back(key);
        Cell& cell = cells[key];
        ++cell.seen;
        if (!row.error.empty()) continue;
        cell.sum_sq += row.squared_error;
        if (std::isfinite(row.crb_exact)) cell.sum_crb += row.crb_exact;
        ++cell.used;
    }

    std::vector<AggregateRow> out;
    for (const auto& key : order) {
        const Cell& cell = cells.at(key);
        if (cell.used == 0)
            throw EmptyCell("aggregate: no successful trials for placement '" +
                            key.first + "' at snr " + format_double(key.second));
        AggregateRow agg;
        agg.placement_label = key.first;
        agg.snr_db = key.second;
        agg.target_index = target_index;
        agg.mse_db = 10.0 * std::log10(cell.sum_sq / cell.used);
        agg.mean_crb_db = 10.0 * std::log10(cell.sum_crb / cell.used);
        agg.trials_used = cell.used;
        out.push_back(std::move(agg));
    }
    return out;
}

void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << "snr_db,placement_label,trial,target_index,omega_true,omega_hat,"
           "squared_error,crb_exact,crb_lower,crb_asymptotic,runtime_ms,k_hat,error\n";
    for (const ResultRow& r : rows)
        out << format_double(r.snr_db) << ',' << r.placement_label << ',' << r.trial
            << ',' << r.target_index << ',' << format_double(r.omega_true) << ','
            << format_double(r.omega_hat) << ',' << format_double(r.squared_error)
            << ',' << format_double(r.crb_exact) << ',' << format_double(r.crb_lower)
            << ',' << format_double(r.crb_asymptotic) << ','
            << format_double(r.runtime_ms) << ',' << r.k_hat << ',' << r.error << '\n';
}

void write_aggregates_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
    out << "placement_label,snr_db,target_index,mse_db,mean_crb_db,trials_used\n";
    for (const AggregateRow& r : rows)
        out << r.placement_label << ',' << format_double(r.snr_db) << ','
            << r.target_index << ',' << format_double(r.mse_db) << ','
            << format_double(r.mean_crb_db) << ',' << r.trials_used << '\n';
}

namespace {

json row_to_json(const ResultRow& r) {
    return json{{"snr_db", r.snr_db},
                {"placement_label", r.placement_label},
                {"trial", r.trial},
                {"target_index", r.target_index},
                {"omega_true", r.omega_true},
                {"omega_hat", r.omega_hat},
                {"squared_error", r.squared_error},
                {"crb_exact", r.crb_exact},
                {"crb_lower", r.crb_lower},
                {"crb_asymptotic", r.crb_asymptotic},
                {"runtime_ms", r.runtime_ms},
                {"k_hat", r.k_hat},
                {"error", r.error}};
}

std::string git_describe() {
    FILE* pipe = ::popen("git describe --always --dirty 2>/dev/null", "r");
    if (!pipe) return "unknown";
    char buf[128] = {};
    std::string out;
    while (std::fgets(buf, sizeof(buf), pipe)) out += buf;
    ::pclose(pipe);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out.empty() ? "unknown" : out;
}

}  // namespace

std::string rows_to_json(const std::vector<ResultRow>& rows) {
    json arr = json::array();
    for (const ResultRow& r : rows) arr.push_back(row_to_json(r));
    return arr.dump(2);
}

std::string aggregates_to_json(const std::vector<AggregateRow>& rows) {
    json arr = json::array();
    for (const AggregateRow& r : rows)
        arr.push_back(json{{"placement_label", r.placement_label},
                           {"snr_db", r.snr_db},
                           {"target_index", r.target_index},
                           {"mse_db", r.mse_db},
                           {"mean_crb_db", r.mean_crb_db},
                           {"trials_used", r.trials_used}});
    return arr.dump(2);
}

std::string metadata_json(const ExperimentSpec& spec) {
    json j;
    j["master_seed"] = spec.master_seed;
    j["git_describe"] = git_describe();
    j["spec"]["M"] = spec.config.num_elements;
    j["spec"]["d_over_lambda"] = spec.config.spacing_ratio;
    j["spec"]["angles_deg"] = std::vector<double>(
        spec.scenario.angles_deg.data(),
        spec.scenario.angles_deg.data() + spec.scenario.angles_deg.size());
    j["spec"]["powers"] = std::vector<double>(
        spec.scenario.powers.data(),
        spec.scenario.powers.data() + spec.scenario.powers.size());
    j["spec"]["N"] = spec.scenario.num_snapshots;
    j["spec"]["snr_sweep_db"] = spec.snr_sweep_db;
    j["spec"]["trials"] = spec.trials;
    j["spec"]["use_relax"] = spec.use_relax;
    j["spec"]["redraw_thresholds"] = spec.redraw_thresholds;
    j["spec"]["censor"] = spec.censor;
    j["spec"]["grid_mult"] = spec.grid_mult;
    j["spec"]["threshold_p_o"] = spec.threshold_p_o;
    json pls = json::array();
    for (const auto& np : spec.placements)
        pls.push_back(json{{"label", np.label},
                           {"delta", std::vector<bool>(np.placement.high_precision)}});
    j["spec"]["placements"] = pls;
    return j.dump(2);
}

}  // namespace mixadc
