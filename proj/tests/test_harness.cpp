// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mixadc/array_model.hpp>
#include <mixadc/harness.hpp>
#include <mixadc/rng.hpp>
#include <mixadc/scenario_io.hpp>

#include <cmath>
#include <sstream>

using namespace mixadc;

namespace {

ExperimentSpec small_spec() {
    ExperimentSpec spec;
    spec.config.num_elements = 8;
    spec.scenario.angles_deg = Vec::Constant(1, 15.0);
    spec.scenario.powers = Vec::Constant(1, 1.0);
    spec.scenario.num_snapshots = 3;
    spec.snr_sweep_db = {10.0, 20.0};
    spec.placements = {{"edges", make_placement("edges", 8, 2)}};
    spec.trials = 2;
    spec.master_seed = 4242;
    spec.use_relax = false;  // keep it fast
    spec.grid_mult = 6;
    return spec;
}

// wall-clock timings are the one legitimately nondeterministic column
std::string rows_csv(std::vector<ResultRow> rows) {
    for (auto& r : rows) r.runtime_ms = 0.0;
    std::ostringstream os;
    write_rows_csv(os, rows);
    return os.str();
}

}  // namespace

TEST_CASE("monte carlo runs are byte-identical across reruns") {
    auto spec = small_spec();
    auto r1 = run_monte_carlo(spec);
    auto r2 = run_monte_carlo(spec);
    CHECK(rows_csv(r1) == rows_csv(r2));
    CHECK(!r1.empty());
    for (const auto& row : r1) {
        CHECK(row.squared_error >= 0.0);
        CHECK(row.error.empty());
    }

    // worker count must not change the merged output
    spec.num_threads = 3;
    auto r3 = run_monte_carlo(spec);
    CHECK(rows_csv(r1) == rows_csv(r3));
}

TEST_CASE("adding a placement does not perturb existing cells") {
    auto spec = small_spec();
    auto base = run_monte_carlo(spec);
    spec.placements.push_back({"front", make_placement("front", 8, 2)});
    auto both = run_monte_carlo(spec);
    std::vector<ResultRow> edges_only;
    for (const auto& r : both)
        if (r.placement_label == "edges") edges_only.push_back(r);
    CHECK(rows_csv(base) == rows_csv(edges_only));
}

TEST_CASE("changing the master seed changes the draws") {
    auto spec = small_spec();
    auto r1 = run_monte_carlo(spec);
    spec.master_seed = 4243;
    auto r2 = run_monte_carlo(spec);
    CHECK(rows_csv(r1) != rows_csv(r2));
}

TEST_CASE("aggregation arithmetic") {
    ResultRow a;
    a.placement_label = "p";
    a.snr_db = 10.0;
    a.target_index = 1;
    a.squared_error = 4.0;
    a.crb_exact = 2.0;

    auto single = aggregate({a});
    REQUIRE(single.size() == 1);
    CHECK(single[0].mse_db == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-12));
    CHECK(single[0].mean_crb_db == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-12));
    CHECK(single[0].trials_used == 1);

    ResultRow b = a;
    b.trial = 1;
    b.squared_error = 1.0;
    ResultRow c = a;
    c.trial = 2;
    c.squared_error = 3.0;
    auto two = aggregate({b, c});
    CHECK(two[0].mse_db == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-12));

    ResultRow bad = a;
    bad.error = "failed";
    CHECK_THROWS_AS(aggregate({bad}), EmptyCell);

    // failed rows are excluded, not fatal, when successes exist
    auto mixed = aggregate({a, bad});
    CHECK(mixed[0].trials_used == 1);
}

TEST_CASE("csv output shape") {
    std::ostringstream empty_rows;
    write_rows_csv(empty_rows, {});
    CHECK(empty_rows.str() ==
          "snr_db,placement_label,trial,target_index,omega_true,omega_hat,"
          "squared_error,crb_exact,crb_lower,crb_asymptotic,runtime_ms,k_hat,error\n");

    std::ostringstream empty_agg;
    write_aggregates_csv(empty_agg, {});
    CHECK(empty_agg.str() ==
          "placement_label,snr_db,target_index,mse_db,mean_crb_db,trials_used\n");
}

TEST_CASE("metadata records the seed verbatim") {
    auto spec = small_spec();
    spec.master_seed = 18446744073709551557ull;
    const std::string meta = metadata_json(spec);
    CHECK(meta.find("18446744073709551557") != std::string::npos);
    CHECK(meta.find("master_seed") != std::string::npos);
}

TEST_CASE("target matching is greedy by distance") {
    Vec truth(3);
    truth << 0.0, 1.0, 2.0;
    Vec est(3);
    est << 1.9, 0.2, 1.1;
    auto m = match_targets(truth, est);
    CHECK(m == std::vector<int>{1, 2, 0});

    Vec est2(1);
    est2 << 0.9;
    auto m2 = match_targets(truth, est2);
    CHECK(m2[1] == 0);
    CHECK(m2[0] == -1);
    CHECK(m2[2] == -1);
}

TEST_CASE("noise level from the first-target snr") {
    SourceScenario sc;
    sc.angles_deg = Vec::Constant(1, 10.0);
    sc.powers = Vec::Constant(1, 1.0);
    sc.num_snapshots = 2;
    CHECK(sigma_for_snr_db(sc, 10.0) ==
          doctest::Approx(std::sqrt(0.1)).epsilon(1e-13));
    sc.powers[0] = 0.5;
    CHECK(sigma_for_snr_db(sc, 0.0) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-13));
}

TEST_CASE("placement modes") {
    auto edges = make_placement("edges", 64, 10);
    for (int i = 0; i < 64; ++i)
        CHECK(edges.high_precision[i] == ((i < 5) || (i >= 59)));

    auto front = make_placement("front", 6, 2);
    CHECK(front.high_precision == std::vector<bool>{true, true, false, false, false, false});

    auto middle = make_placement("middle", 64, 10);
    for (int i = 0; i < 64; ++i)
        CHECK(middle.high_precision[i] == (i >= 27 && i < 37));

    std::vector<bool> delta{false, true, false};
    auto expl = make_placement("explicit", 3, 1, delta);
    CHECK(expl.high_precision == delta);

    CHECK_THROWS_AS(make_placement("bogus", 8, 2), ConfigError);
}

TEST_CASE("scenario json round trip") {
    const std::string text = R"({
      "M": 16, "d_over_lambda": 0.5,
      "angles_deg": [10.0, 25.0], "powers": [1.0, 0.8],
      "N": 4, "sigma": 0.5,
      "placement": {"mode": "edges", "M0": 4},
      "threshold": {"p_o": 2.05, "seed": 99}
    })";
    auto sf = parse_scenario(text);
    CHECK(sf.config.num_elements == 16);
    CHECK(sf.scenario.num_snapshots == 4);
    CHECK(sf.scenario.angles_deg[1] == doctest::Approx(25.0));
    CHECK(sf.sigma == doctest::Approx(0.5));
    CHECK(sf.placement.num_high() == 4);
    CHECK(sf.placement_mode == "edges");
    CHECK(sf.threshold_p_o == doctest::Approx(2.05));
    CHECK(sf.has_threshold_seed);
    CHECK(sf.threshold_seed == 99);

    auto sf2 = parse_scenario(scenario_to_json(sf));
    CHECK(sf2.config.num_elements == sf.config.num_elements);
    CHECK(sf2.sigma == doctest::Approx(sf.sigma));
    CHECK(sf2.placement.high_precision == sf.placement.high_precision);
    CHECK(sf2.threshold_seed == sf.threshold_seed);

    CHECK_THROWS_AS(parse_scenario("{"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("{\"M\": -1}"), ConfigError);
}

TEST_CASE("observation csv round trip") {
    ArrayConfig cfg;
    cfg.num_elements = 6;
    SourceScenario sc;
    sc.angles_deg = Vec::Constant(1, 12.0);
    sc.powers = Vec::Constant(1, 1.0);
    sc.num_snapshots = 3;
    SeedStream root(91);
    auto snaps = synthesize_snapshots(cfg, sc, 0.5, root.fork("noise"));
    auto th = generate_thresholds(cfg, 3, 1.25, root.fork("thr"));
    auto z = one_bit_quantize(snaps.x, th.entries);
    auto pl = make_placement("edges", 6, 2);
    auto obs = mixed_sample(snaps.x, z, pl, th);

    std::ostringstream os;
    write_observation_csv(os, obs);
    std::istringstream is(os.str());
    auto back = read_observation_csv(is, pl, th);
    CHECK((back.y_high - obs.y_high).norm() < 1e-9);
    CHECK((back.y_onebit - obs.y_onebit).norm() == 0.0);
}

TEST_CASE("float formatting carries twelve significant digits") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1234.5678901234).substr(0, 13) == "1234.56789012");
    CHECK(format_double(1.0) == "1");
}
