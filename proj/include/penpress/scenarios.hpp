#pragma once

#include <span>
#include <string>
#include <vector>

#include "penpress/dataio.hpp"
#include "penpress/eval.hpp"
#include "penpress/stylus.hpp"
#include "penpress/vq.hpp"

// The match/mismatch experiment matrix: which pen's pressure space each side
// of the recognizer sees, raw or normalized, plus the no-pressure baseline
// and the partial-mismatch sweep. The base database is always in ink raw
// space; plastic-space data is derived through the cross-stylus map.
namespace penpress::scenarios {

enum class Pen { ink, plastic };

struct Scenario {
    std::string id;  // "1".."7" or "no_pressure"
    Pen train_pen = Pen::ink;
    Pen test_pen = Pen::ink;
    bool normalized = false;
    bool use_pressure = true;
};

// The eight standard rows: 1 (ink/ink raw), 2 (ink/ink normalized),
// 3 (plastic/plastic normalized), 4 (plastic/ink raw), 5 (ink/plastic raw),
// 6 (plastic/ink normalized), 7 (ink/plastic normalized), no_pressure
// (ink/ink raw, pressure weight zero).
std::span<const Scenario> all_scenarios();
Scenario scenario_by_id(const std::string& id);

struct ScenarioData {
    dataio::Database db;
    std::size_t n_mapped_samples = 0;   // samples run through the cross-pen map
    std::size_t n_clamped_samples = 0;  // of those, saturated at full scale
};

// Applies the scenario's per-side transforms to a copy of the base database:
// plastic sides are mapped ink->plastic; normalized sides then replace the
// pressure channel with its physical-unit value under the side's own pen.
ScenarioData build_scenario_data(const Scenario& scenario, const dataio::Database& base);

// Channel weights the scenario scores with: unit weights for raw pressure,
// the train pen's pressure weight for normalized pressure, zero for the
// no-pressure baseline.
vq::Weights scenario_weights(const Scenario& scenario, stylus::WeightMode mode);

struct RunParams {
    int sections = 2;
    int bits = 6;
    stylus::WeightMode weight_mode = stylus::WeightMode::published;
    eval::CostParams costs{};
    bool skilled = false;  // impostors from labeled forgeries instead of other users
};

struct ScenarioResult {
    std::string scenario_id;
    std::string forgery;  // "random" or "skilled"
    int bits = 0;
    double identification_rate_pct = 0.0;
    double min_dcf_pct = 0.0;
    double eer_pct = 0.0;
    double clamped_pct = 0.0;  // share of mapped samples that saturated
    std::size_t n_genuine = 0;
    std::size_t n_impostor = 0;
};

struct ScenarioRun {
    ScenarioResult result;
    eval::DetCurve curve;
    double min_dcf_threshold = 0.0;
};

// Trains one model per user on the scenario's train side, scores every test
// signature against every model, and reduces to identification rate plus the
// verification metrics. Random-forgery impostor trials are every other
// user's test signatures; skilled trials are the database's labeled
// forgeries against their target's model.
ScenarioRun run_scenario(const Scenario& scenario, const dataio::Database& base,
                         const RunParams& params);

struct MismatchSweepPoint {
    double fraction = 0.0;  // percent of users tested with the other pen
    double identification_rate_pct = 0.0;
    double min_dcf_pct = 0.0;
};

// Trains once on ink raw data, then for each fraction f switches the first
// floor(f*U/100) users (by sorted id) to plastic-mapped test data. f=0
// reproduces scenario 1, f=100 scenario 5.
std::vector<MismatchSweepPoint> mismatch_sweep(const dataio::Database& base,
                                               std::span<const double> fractions,
                                               const RunParams& params);

// CSV: scenario,forgery,bits,identification_pct,min_dcf_pct,eer_pct,clamped_pct
// with rates to two decimals, one row per result in input order.
std::string results_table(std::span<const ScenarioResult> results);

}  // namespace penpress::scenarios
