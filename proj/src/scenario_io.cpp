// SPDX-License-Identifier: Apache-2.0
#include "mixadc/scenario_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mixadc {

using nlohmann::json;

Placement make_placement(const std::string& mode, int num_elements, int num_high,
                         const std::vector<bool>& delta) {
    if (num_elements < 1)
        throw ConfigError("placement: num_elements must be >= 1");
    if (mode == "explicit") {
        if (static_cast<int>(delta.size()) != num_elements)
            throw ConfigError("placement: explicit delta length must equal M");
        Placement p;
        p.high_precision = delta;
        return p;
    }
    if (num_high < 0 || num_high > num_elements)
        throw ConfigError("placement: need 0 <= M0 <= M");
    Placement p = Placement::all_onebit(num_elements);
    if (mode == "edges") {
        const int front = (num_high + 1) / 2;
        for (int i = 0; i < front; ++i) p.high_precision[i] = true;
        for (int i = 0; i < num_high - front; ++i)
            p.high_precision[num_elements - 1 - i] = true;
    } else if (mode == "front") {
        for (int i = 0; i < num_high; ++i) p.high_precision[i] = true;
    } else if (mode == "middle") {
        const int start = (num_elements - num_high) / 2;
        for (int i = 0; i < num_high; ++i) p.high_precision[start + i] = true;
    } else {
        throw ConfigError("placement: unknown mode '" + mode + "'");
    }
    return p;
}

ScenarioFile parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
    }

    ScenarioFile file;
    try {
        file.config.num_elements = j.at("M").get<int>();
        file.config.spacing_ratio = j.value("d_over_lambda", 0.5);

        const auto angles = j.at("angles_deg").get<std::vector<double>>();
        const auto powers = j.at("powers").get<std::vector<double>>();
        file.scenario.angles_deg =
            Eigen::Map<const Vec>(angles.data(), static_cast<Eigen::Index>(angles.size()));
        file.scenario.powers =
            Eigen::Map<const Vec>(powers.data(), static_cast<Eigen::Index>(powers.size()));
        file.scenario.num_snapshots = j.at("N").get<int>();
        file.sigma = j.at("sigma").get<double>();

        const json& pj = j.at("placement");
        file.placement_mode = pj.at("mode").get<std::string>();
        std::vector<bool> delta;
        if (pj.contains("delta")) delta = pj.at("delta").get<std::vector<bool>>();
        const int m0 = pj.value("M0", static_cast<int>(
                                          std::count(delta.begin(), delta.end(), true)));
        file.placement =
            make_placement(file.placement_mode, file.config.num_elements, m0, delta);

        if (j.contains("threshold")) {
            const json& tj = j.at("threshold");
            file.threshold_p_o = tj.value("p_o", 0.0);
            if (tj.contains("seed")) {
                file.threshold_seed = tj.at("seed").get<std::uint64_t>();
                file.has_threshold_seed = true;
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }

    try {
        file.config.validate();
        file.scenario.validate();
        file.placement.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    if (!(file.sigma > 0.0))
        throw ConfigError("scenario: sigma must be > 0");
    if (file.threshold_p_o < 0.0)
        throw ConfigError("scenario: threshold p_o must be > 0 when given");
    return file;
}

ScenarioFile load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string scenario_to_json(const ScenarioFile& file) {
    json j;
    j["M"] = file.config.num_elements;
    j["d_over_lambda"] = file.config.spacing_ratio;
    j["angles_deg"] = std::vector<double>(
        file.scenario.angles_deg.data(),
        file.scenario.angles_deg.data() + file.scenario.angles_deg.size());
    j["powers"] = std::vector<double>(
        file.scenario.powers.data(),
        file.scenario.powers.data() + file.scenario.powers.size());
    j["N"] = file.scenario.num_snapshots;
    j["sigma"] = file.sigma;
    j["placement"]["mode"] = file.placement_mode;
    j["placement"]["M0"] = file.placement.num_high();
    j["placement"]["delta"] = std::vector<bool>(file.placement.high_precision);
    if (file.threshold_p_o > 0.0) j["threshold"]["p_o"] = file.threshold_p_o;
    if (file.has_threshold_seed) j["threshold"]["seed"] = file.threshold_seed;
    return j.dump(2);
}

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

void write_observation_csv(std::ostream& out, const MixedObservation& observation) {
    out << "row,snapshot,re,im,kind\n";
    const auto hi = observation.placement.high_rows();
    const auto lo = observation.placement.onebit_rows();
    const int n = observation.num_snapshots();
    for (int nn = 0; nn < n; ++nn) {
        for (std::size_t i = 0; i < hi.size(); ++i)
            out << hi[i] + 1 << ',' << nn + 1 << ','
                << format_double(observation.y_high(static_cast<Eigen::Index>(i), nn)
                                     .real())
                << ','
                << format_double(observation.y_high(static_cast<Eigen::Index>(i), nn)
                                     .imag())
                << ",high\n";
        for (std::size_t i = 0; i < lo.size(); ++i)
            out << lo[i] + 1 << ',' << nn + 1 << ','
                << format_double(observation.y_onebit(static_cast<Eigen::Index>(i), nn)
                                     .real())
                << ','
                << format_double(observation.y_onebit(static_cast<Eigen::Index>(i), nn)
                                     .imag())
                << ",onebit\n";
    }
}

MixedObservation read_observation_csv(std::istream& in, const Placement& placement,
                                      const ThresholdMatrix& thresholds) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("row,snapshot,re,im,kind", 0) != 0)
        throw IoError("observation csv: missing header");

    const auto hi = placement.high_rows();
    const auto lo = placement.onebit_rows();
    std::vector<int> row_to_hi(placement.size(), -1), row_to_lo(placement.size(), -1);
    for (std::size_t i = 0; i < hi.size(); ++i) row_to_hi[hi[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < lo.size(); ++i) row_to_lo[lo[i]] = static_cast<int>(i);

    struct Entry {
        int row, snap;
        double re, im;
        std::string kind;
    };
    std::vector<Entry> entries;
    int max_snap = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        Entry e;
        char comma;
        ls >> e.row >> comma >> e.snap >> comma >> e.re >> comma >> e.im >> comma;
        std::getline(ls, e.kind);
        if (!ls && e.kind.empty())
            throw IoError("observation csv: malformed line: " + line);
        if (e.row < 1 || e.row > placement.size() || e.snap < 1)
            throw IoError("observation csv: index out of range: " + line);
        max_snap = std::max(max_snap, e.snap);
        entries.push_back(std::move(e));
    }

    MixedObservation obs;
    obs.placement = placement;
    obs.thresholds = thresholds;
    obs.y_high = CMat::Zero(static_cast<Eigen::Index>(hi.size()), max_snap);
    obs.y_onebit = CMat::Zero(static_cast<Eigen::Index>(lo.size()), max_snap);
    for (const Entry& e : entries) {
        if (e.kind == "high" && row_to_hi[e.row - 1] >= 0)
            obs.y_high(row_to_hi[e.row - 1], e.snap - 1) = cplx(e.re, e.im);
        else if (e.kind == "onebit" && row_to_lo[e.row - 1] >= 0)
            obs.y_onebit(row_to_lo[e.row - 1], e.snap - 1) = cplx(e.re, e.im);
        else
            throw IoError("observation csv: kind/placement mismatch at row " +
                          std::to_string(e.row));
    }
    return obs;
}

}  // namespace mixadc
