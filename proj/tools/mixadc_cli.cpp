// SPDX-License-Identifier: Apache-2.0
// Command-line front end: simulate, crb, placement, estimate, montecarlo,
// efficiency. Exit codes: 0 ok, 2 config error, 3 runtime failure.

#include "mixadc/array_model.hpp"
#include "mixadc/crb.hpp"
#include "mixadc/estimation.hpp"
#include "mixadc/harness.hpp"
#include "mixadc/placement.hpp"
#include "mixadc/rng.hpp"
#include "mixadc/scenario_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mixadc;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir;
    int threads = 1;
    std::string format = "csv";
};

ScenarioFile require_scenario(const GlobalOpts& g) {
    if (g.config_path.empty())
        throw ConfigError("missing --config scenario file");
    return load_scenario(g.config_path);
}

std::uint64_t effective_seed(const GlobalOpts& g, const ScenarioFile& file) {
    if (g.seed_given) return g.seed;
    if (file.has_threshold_seed) return file.threshold_seed;
    return 0;
}

// Writes to <out>/<name> when --out was given, else to stdout.
void deliver(const GlobalOpts& g, const std::string& name, const std::string& body) {
    if (g.out_dir.empty()) {
        std::cout << body;
        if (!body.empty() && body.back() != '\n') std::cout << '\n';
        return;
    }
    fs::create_directories(g.out_dir);
    const fs::path path = fs::path(g.out_dir) / name;
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << body;
}

MixedObservation make_observation(const ScenarioFile& file, std::uint64_t seed,
                                  Snapshots* snaps_out = nullptr) {
    const SeedStream seeds(seed);
    const Snapshots snaps =
        synthesize_snapshots(file.config, file.scenario, file.sigma, seeds);
    const double p_o = file.threshold_p_o > 0.0
                           ? file.threshold_p_o
                           : default_threshold_power(file.scenario, file.sigma);
    const ThresholdMatrix thresholds = generate_thresholds(
        file.config, file.scenario.num_snapshots, p_o, seeds.fork("threshold-stream"));
    const CMat z = one_bit_quantize(snaps.x, thresholds.entries);
    if (snaps_out) *snaps_out = snaps;
    return mixed_sample(snaps.x, z, file.placement, thresholds);
}

int cmd_simulate(const GlobalOpts& g) {
    const ScenarioFile file = require_scenario(g);
    const MixedObservation obs = make_observation(file, effective_seed(g, file));
    std::ostringstream body;
    write_observation_csv(body, obs);
    deliver(g, "observation.csv", body.str());
    return 0;
}

int cmd_crb(const GlobalOpts& g, const std::vector<double>& snrs_in) {
    const ScenarioFile file = require_scenario(g);
    std::vector<double> snrs = snrs_in;
    if (snrs.empty())
        snrs.push_back(10.0 *
                       std::log10(file.scenario.powers[0] / (file.sigma * file.sigma)));

    const int k = file.scenario.num_sources();
    const Vec omegas = file.scenario.omegas();
    const CMat a = steering_matrix(file.config, omegas);
    const CMat a_dot = steering_derivative(file.config, omegas);
    const ParamLayout layout{k, file.scenario.num_snapshots, false};
    const SeedStream seeds(effective_seed(g, file));

    std::ostringstream body;
    body << "snr_db,placement_label,target_index,crb_exact,crb_lower,crb_asymptotic\n";
    for (double snr : snrs) {
        const double sigma = sigma_for_snr_db(file.scenario, snr);
        Snapshots snaps =
            synthesize_snapshots(file.config, file.scenario, 0.0, seeds);
        const double p_o = file.threshold_p_o > 0.0
                               ? file.threshold_p_o
                               : default_threshold_power(file.scenario, sigma);
        const ThresholdMatrix thresholds =
            generate_thresholds(file.config, file.scenario.num_snapshots, p_o,
                                seeds.fork("threshold-stream"));

        const FisherMatrix fm = fim_mixed(a, a_dot, snaps.s, thresholds.entries, sigma,
                                          file.placement, layout);
        const Vec exact = crb_from_fim(fm).doa_variances;
        const Mat lower =
            crb_lower_bound_doa(a, a_dot, signal_covariance(snaps.s), file.placement,
                                sigma, file.scenario.num_snapshots);
        const Vec snrs_linear = file.scenario.powers / (sigma * sigma);
        const Vec asym =
            asymptotic_crb(file.placement, snrs_linear, file.scenario.num_snapshots);

        for (int t = 0; t < k; ++t)
            body << format_double(snr) << ',' << file.placement_mode << ',' << t + 1
                 << ',' << format_double(exact[t]) << ',' << format_double(lower(t, t))
                 << ',' << format_double(asym[t]) << '\n';
    }
    deliver(g, "crb.csv", body.str());
    return 0;
}

int cmd_placement(const GlobalOpts& g, int m, int m0, double rho_low, double rho_high,
                  bool exhaustive) {
    PlacementSolution sol;
    if (exhaustive)
        sol = exhaustive_oracle(m, m0, rho_low, rho_high);
    else if (rho_low == kOneBitCoeff && rho_high == 1.0)
        sol = optimal_edge_placement(m, m0);
    else
        sol = two_precision_optimize(m, m - m0, m0, rho_low, rho_high);
    sol.placement.rho_low = rho_low;
    sol.placement.rho_high = rho_high;

    Placement front = Placement::all_onebit(m);
    front.rho_low = rho_low;
    front.rho_high = rho_high;
    for (int i = 0; i < m0; ++i) front.high_precision[i] = true;
    const double s_front = placement_score(front.coefficients());
    const double gain_db =
        s_front > 0.0 ? 10.0 * std::log10(sol.score / s_front) : 0.0;

    json j;
    j["delta"] = std::vector<bool>(sol.placement.high_precision);
    j["score"] = sol.score;
    j["method"] = sol.method;
    j["gain_db_over_front"] = gain_db;
    deliver(g, "placement.json", j.dump(2));
    return 0;
}

int cmd_estimate(const GlobalOpts& g, const std::string& obs_path, int grid_mult,
                 double q, double eps_outer, double eps_inner, int max_outer,
                 int max_inner, int k_max) {
    const ScenarioFile file = require_scenario(g);
    MixedObservation obs;
    if (obs_path.empty()) {
        obs = make_observation(file, effective_seed(g, file));
    } else {
        const double p_o = file.threshold_p_o > 0.0
                               ? file.threshold_p_o
                               : default_threshold_power(file.scenario, file.sigma);
        const ThresholdMatrix thresholds = generate_thresholds(
            file.config, file.scenario.num_snapshots, p_o,
            SeedStream(effective_seed(g, file)).fork("threshold-stream"));
        std::ifstream in(obs_path);
        if (!in)
            throw IoError("cannot open observation file: " + obs_path);
        obs = read_observation_csv(in, file.placement, thresholds);
    }

    const AngularGrid grid = AngularGrid::build(file.config, grid_mult);
    SlimOptions opts;
    opts.q = q;
    opts.eps_outer = eps_outer;
    opts.eps_inner = eps_inner;
    opts.max_outer = max_outer;
    opts.max_inner = max_inner;
    const ModelSelection sel =
        slim_relax_mbic(file.config, obs, grid, k_max, opts, RelaxOptions{});

    json j;
    j["spectrum"] = std::vector<double>(sel.spectrum.data(),
                                        sel.spectrum.data() + sel.spectrum.size());
    j["K_hat"] = sel.chosen_k;
    json mbic_table = json::array();
    for (const auto& cand : sel.candidates)
        mbic_table.push_back(json{{"K", cand.k},
                                  {"neg_log_lik", cand.neg_log_lik},
                                  {"mbic", cand.mbic_value},
                                  {"noise_only_extension", cand.noise_only_extension}});
    j["mbic_table"] = mbic_table;
    for (const auto& cand : sel.candidates)
        if (cand.k == sel.chosen_k) {
            j["sigma_hat"] = cand.sigma;
            json targets = json::array();
            for (const auto& t : cand.targets)
                targets.push_back(
                    json{{"theta_deg", t.theta_deg()}, {"power", t.power()}});
            j["targets"] = targets;
        }
    deliver(g, "estimate.json", j.dump(2));
    return 0;
}

int cmd_montecarlo(const GlobalOpts& g, const std::vector<double>& snrs,
                   const std::vector<std::string>& placement_modes, int trials,
                   bool slim_only, bool fixed_thresholds, bool censor, int grid_mult) {
    const ScenarioFile file = require_scenario(g);

    ExperimentSpec spec;
    spec.config = file.config;
    spec.scenario = file.scenario;
    spec.snr_sweep_db = snrs;
    if (spec.snr_sweep_db.empty())
        spec.snr_sweep_db.push_back(
            10.0 * std::log10(file.scenario.powers[0] / (file.sigma * file.sigma)));
    if (placement_modes.empty()) {
        spec.placements.push_back({file.placement_mode, file.placement});
    } else {
        const int m0 = file.placement.num_high();
        for (const std::string& mode : placement_modes)
            spec.placements.push_back(
                {mode, make_placement(mode, file.config.num_elements, m0,
                                      file.placement.high_precision)});
    }
    spec.trials = trials;
    spec.master_seed = effective_seed(g, file);
    spec.use_relax = !slim_only;
    spec.redraw_thresholds = !fixed_thresholds;
    spec.censor = censor;
    spec.grid_mult = grid_mult;
    spec.threshold_p_o = file.threshold_p_o;
    spec.num_threads = g.threads;

    const std::vector<ResultRow> rows = run_monte_carlo(spec);
    const std::vector<AggregateRow> aggs = aggregate(rows);

    if (g.format == "json") {
        deliver(g, "results.json", rows_to_json(rows));
        deliver(g, "aggregates.json", aggregates_to_json(aggs));
    } else {
        std::ostringstream rb, ab;
        write_rows_csv(rb, rows);
        write_aggregates_csv(ab, aggs);
        deliver(g, "results.csv", rb.str());
        deliver(g, "aggregates.csv", ab.str());
    }
    deliver(g, "metadata.json", metadata_json(spec));
    return 0;
}

int cmd_efficiency(const GlobalOpts& g, int m, std::vector<int> m0_values,
                   double snr_db, int n, const std::string& mode) {
    if (m0_values.empty())
        for (int m0 = 0; m0 <= m; m0 += std::max(1, m / 16)) m0_values.push_back(m0);
    const EfficiencyMode em =
        mode == "exact" ? EfficiencyMode::Exact : EfficiencyMode::Asymptotic;
    const std::vector<EfficiencyRow> rows =
        performance_efficiency(m, m0_values, snr_db, n, em);
    std::ostringstream body;
    body << "num_high,kappa,eta\n";
    for (const EfficiencyRow& r : rows)
        body << r.num_high << ',' << format_double(r.kappa) << ','
             << format_double(r.eta) << '\n';
    deliver(g, "efficiency.csv", body.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed-ADC array toolkit: synthesis, bounds, placement, estimation"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "Scenario JSON file")->expected(1);
    auto* seed_opt = app.add_option("--seed", g.seed, "Master seed");
    app.add_option("--out", g.out_dir, "Output directory (default: stdout)");
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--format", g.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}));

    app.add_subcommand("simulate", "Synthesize a mixed observation, emit CSV");

    std::vector<double> crb_snrs;
    auto* crb_cmd = app.add_subcommand("crb", "Exact/lower/asymptotic bounds per SNR");
    crb_cmd->add_option("--snr", crb_snrs, "SNR sweep in dB");

    int pl_m = 0, pl_m0 = 0;
    double pl_rho_low = kOneBitCoeff, pl_rho_high = 1.0;
    bool pl_exhaustive = false;
    auto* pl_cmd = app.add_subcommand("placement", "Optimize ADC placement");
    pl_cmd->add_option("--M", pl_m, "Element count")->required();
    pl_cmd->add_option("--M0", pl_m0, "High-precision count")->required();
    pl_cmd->add_option("--rho-low", pl_rho_low, "Low-precision coefficient");
    pl_cmd->add_option("--rho-high", pl_rho_high, "High-precision coefficient");
    pl_cmd->add_flag("--exhaustive", pl_exhaustive, "Enumerate all placements");

    std::string est_obs;
    int est_grid_mult = 10, est_max_outer = 50, est_max_inner = 50, est_kmax = 4;
    double est_q = 0.0, est_eps_outer = 1e-6, est_eps_inner = 1e-4;
    auto* est_cmd = app.add_subcommand("estimate", "SLIM + RELAX + mBIC estimation");
    est_cmd->add_option("--obs", est_obs, "Observation CSV (default: synthesize)");
    est_cmd->add_option("--grid-mult", est_grid_mult, "Grid points per element");
    est_cmd->add_option("--q", est_q, "Sparsity exponent");
    est_cmd->add_option("--eps-outer", est_eps_outer, "Outer tolerance");
    est_cmd->add_option("--eps-inner", est_eps_inner, "Inner tolerance");
    est_cmd->add_option("--max-outer", est_max_outer, "Outer iteration cap");
    est_cmd->add_option("--max-inner", est_max_inner, "Inner iteration cap");
    est_cmd->add_option("--kmax", est_kmax, "Largest model order tried");

    std::vector<double> mc_snrs;
    std::vector<std::string> mc_placements;
    int mc_trials = 1, mc_grid_mult = 10;
    bool mc_slim_only = false, mc_fixed_thresholds = false, mc_censor = false;
    auto* mc_cmd = app.add_subcommand("montecarlo", "Monte Carlo MSE/CRB sweep");
    mc_cmd->add_option("--snr", mc_snrs, "SNR sweep in dB");
    mc_cmd->add_option("--placements", mc_placements,
                       "Placement modes to compare (edges front middle)");
    mc_cmd->add_option("--trials", mc_trials, "Trials per cell")
        ->check(CLI::PositiveNumber);
    mc_cmd->add_option("--grid-mult", mc_grid_mult, "Grid points per element");
    mc_cmd->add_flag("--slim-only", mc_slim_only, "Skip the RELAX refinement");
    mc_cmd->add_flag("--fixed-thresholds", mc_fixed_thresholds,
                     "Reuse one threshold draw per (placement, snr) cell");
    mc_cmd->add_flag("--censor", mc_censor, "Drop misses beyond 3 grid cells");

    int ef_m = 64, ef_n = 16;
    std::vector<int> ef_m0;
    double ef_snr = 10.0;
    std::string ef_mode = "asymptotic";
    auto* ef_cmd = app.add_subcommand("efficiency", "Performance efficiency vs kappa");
    ef_cmd->add_option("--M", ef_m, "Element count");
    ef_cmd->add_option("--M0", ef_m0, "High-precision counts to evaluate");
    ef_cmd->add_option("--snr", ef_snr, "SNR in dB");
    ef_cmd->add_option("--N", ef_n, "Snapshots");
    ef_cmd->add_option("--mode", ef_mode, "asymptotic or exact")
        ->check(CLI::IsMember({"asymptotic", "exact"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    g.seed_given = seed_opt->count() > 0;

    try {
        if (app.got_subcommand("simulate")) return cmd_simulate(g);
        if (app.got_subcommand(crb_cmd)) return cmd_crb(g, crb_snrs);
        if (app.got_subcommand(pl_cmd))
            return cmd_placement(g, pl_m, pl_m0, pl_rho_low, pl_rho_high, pl_exhaustive);
        if (app.got_subcommand(est_cmd))
            return cmd_estimate(g, est_obs, est_grid_mult, est_q, est_eps_outer,
                                est_eps_inner, est_max_outer, est_max_inner, est_kmax);
        if (app.got_subcommand(mc_cmd))
            return cmd_montecarlo(g, mc_snrs, mc_placements, mc_trials, mc_slim_only,
                                  mc_fixed_thresholds, mc_censor, mc_grid_mult);
        if (app.got_subcommand(ef_cmd))
            return cmd_efficiency(g, ef_m, ef_m0, ef_snr, ef_n, ef_mode);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
