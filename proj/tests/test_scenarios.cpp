#include <doctest.h>

#include <cmath>
#include <string>

#include "penpress/scenarios.hpp"

using namespace penpress;
using scenarios::Pen;
using scenarios::RunParams;
using scenarios::Scenario;

namespace {

dataio::Database small_db() {
    dataio::SyntheticConfig cfg;
    cfg.n_users = 4;
    cfg.n_train = 2;
    cfg.n_test = 2;
    cfg.n_samples_mean = 80;
    cfg.seed = 3;
    return dataio::synth_database(cfg);
}

RunParams small_params() {
    RunParams params;
    params.sections = 2;
    params.bits = 4;
    return params;
}

}  // namespace

TEST_CASE("the scenario table lists the eight standard rows") {
    auto all = scenarios::all_scenarios();
    REQUIRE(all.size() == 8);
    CHECK(all[0].id == "1");
    CHECK(all[7].id == "no_pressure");

    auto s1 = scenarios::scenario_by_id("1");
    CHECK(s1.train_pen == Pen::ink);
    CHECK(s1.test_pen == Pen::ink);
    CHECK(!s1.normalized);
    CHECK(s1.use_pressure);

    auto s3 = scenarios::scenario_by_id("3");
    CHECK(s3.train_pen == Pen::plastic);
    CHECK(s3.test_pen == Pen::plastic);
    CHECK(s3.normalized);

    auto s4 = scenarios::scenario_by_id("4");
    CHECK(s4.train_pen == Pen::plastic);
    CHECK(s4.test_pen == Pen::ink);
    CHECK(!s4.normalized);

    auto s7 = scenarios::scenario_by_id("7");
    CHECK(s7.train_pen == Pen::ink);
    CHECK(s7.test_pen == Pen::plastic);
    CHECK(s7.normalized);

    auto np = scenarios::scenario_by_id("no_pressure");
    CHECK(!np.use_pressure);
    CHECK_THROWS_AS(scenarios::scenario_by_id("8"), std::invalid_argument);
}

TEST_CASE("scenario weights: raw is unit, normalized uses the train pen, baseline zeroes p") {
    using stylus::WeightMode;
    CHECK(scenarios::scenario_weights(scenarios::scenario_by_id("1"), WeightMode::published).p ==
          1.0);
    CHECK(scenarios::scenario_weights(scenarios::scenario_by_id("2"), WeightMode::published).p ==
          doctest::Approx(1024.0 / 45.0).epsilon(1e-13));
    CHECK(scenarios::scenario_weights(scenarios::scenario_by_id("3"), WeightMode::published).p ==
          doctest::Approx(1024.0 / 25.0).epsilon(1e-13));
    // scenario 6 trains on the plastic side
    CHECK(scenarios::scenario_weights(scenarios::scenario_by_id("6"), WeightMode::published).p ==
          doctest::Approx(1024.0 / 25.0).epsilon(1e-13));
    CHECK(scenarios::scenario_weights(scenarios::scenario_by_id("2"), WeightMode::exact).p ==
          doctest::Approx(21.577847832243542).epsilon(1e-12));
    CHECK(
        scenarios::scenario_weights(scenarios::scenario_by_id("no_pressure"), WeightMode::exact)
            .p == 0.0);
    // the other four channels always stay at unit weight
    auto w = scenarios::scenario_weights(scenarios::scenario_by_id("3"), WeightMode::published);
    CHECK(w.x == 1.0);
    CHECK(w.altitude == 1.0);
}

TEST_CASE("scenario data transforms the right sides") {
    auto base = small_db();
    const auto& probe = base.at("u001").test[0].samples[10];

    auto s1 = scenarios::build_scenario_data(scenarios::scenario_by_id("1"), base);
    CHECK(s1.db == base);
    CHECK(s1.n_mapped_samples == 0);

    auto s5 = scenarios::build_scenario_data(scenarios::scenario_by_id("5"), base);
    CHECK(s5.db.at("u001").train == base.at("u001").train);  // train side untouched
    CHECK(s5.n_mapped_samples > 0);
    auto ink = stylus::StylusProfile::ink();
    auto plastic = stylus::StylusProfile::plastic();
    CHECK(s5.db.at("u001").test[0].samples[10].p ==
          doctest::Approx(stylus::map_pressure(ink, plastic, probe.p)).epsilon(1e-12));

    auto s2 = scenarios::build_scenario_data(scenarios::scenario_by_id("2"), base);
    CHECK(s2.db.at("u001").test[0].samples[10].p ==
          doctest::Approx(stylus::to_physical(ink, probe.p)).epsilon(1e-12));
    CHECK(s2.db.at("u001").train[0].samples[5].p ==
          doctest::Approx(stylus::to_physical(ink, base.at("u001").train[0].samples[5].p))
              .epsilon(1e-12));
    // non-pressure channels never change
    CHECK(s2.db.at("u001").test[0].samples[10].x == probe.x);

    auto s3 = scenarios::build_scenario_data(scenarios::scenario_by_id("3"), base);
    double mapped = stylus::map_pressure(ink, plastic, probe.p);
    CHECK(s3.db.at("u001").test[0].samples[10].p ==
          doctest::Approx(stylus::to_physical(plastic, mapped)).epsilon(1e-12));
}

TEST_CASE("a scenario run is deterministic and counts its trials") {
    auto base = small_db();
    auto params = small_params();
    auto run1 = scenarios::run_scenario(scenarios::scenario_by_id("1"), base, params);
    auto run2 = scenarios::run_scenario(scenarios::scenario_by_id("1"), base, params);
    CHECK(run1.result.identification_rate_pct == run2.result.identification_rate_pct);
    CHECK(run1.result.min_dcf_pct == run2.result.min_dcf_pct);
    CHECK(run1.result.eer_pct == run2.result.eer_pct);

    CHECK(run1.result.scenario_id == "1");
    CHECK(run1.result.forgery == "random");
    CHECK(run1.result.bits == 4);
    CHECK(run1.result.n_genuine == 4 * 2);
    CHECK(run1.result.n_impostor == 4 * 3 * 2);
    CHECK(run1.result.identification_rate_pct >= 0.0);
    CHECK(run1.result.identification_rate_pct <= 100.0);
    CHECK(run1.result.clamped_pct == 0.0);  // nothing mapped in scenario 1
    CHECK(run1.curve.size() >= 3);
    // matched training on a tiny separable corpus should identify perfectly
    CHECK(run1.result.identification_rate_pct == 100.0);
}

TEST_CASE("normalized matched scenarios agree across the pen swap") {
    // Scenarios 2 and 7 share the ink-trained normalized models; 3 and 6
    // share the plastic-trained ones. In physical pressure space the test
    // sides differ only by map round-trip error and full-scale clamping, so
    // the identification rate must agree tightly on a clamp-free corpus.
    auto base = small_db();
    auto params = small_params();
    auto r2 = scenarios::run_scenario(scenarios::scenario_by_id("2"), base, params);
    auto r7 = scenarios::run_scenario(scenarios::scenario_by_id("7"), base, params);
    CHECK(r2.result.identification_rate_pct ==
          doctest::Approx(r7.result.identification_rate_pct).epsilon(1e-12));
    auto r3 = scenarios::run_scenario(scenarios::scenario_by_id("3"), base, params);
    auto r6 = scenarios::run_scenario(scenarios::scenario_by_id("6"), base, params);
    CHECK(r3.result.identification_rate_pct ==
          doctest::Approx(r6.result.identification_rate_pct).epsilon(1e-12));
}

TEST_CASE("skilled trials need labeled forgeries") {
    auto base = small_db();
    auto params = small_params();
    params.skilled = true;
    CHECK_THROWS_AS(scenarios::run_scenario(scenarios::scenario_by_id("1"), base, params),
                    std::runtime_error);

    // forge u001 with u002's test signatures
    for (const auto& sig : base.at("u002").test) {
        auto forgery = sig;
        forgery.user_id = "u001";
        forgery.session_id = "forgery-" + forgery.session_id;
        forgery.kind = dataio::SignatureKind::forgery;
        base.at("u001").forgeries.push_back(forgery);
    }
    auto run = scenarios::run_scenario(scenarios::scenario_by_id("1"), base, params);
    CHECK(run.result.forgery == "skilled");
    CHECK(run.result.n_impostor == 2);
    CHECK(run.result.n_genuine == 8);
}

TEST_CASE("run_scenario validates the database shape") {
    dataio::SyntheticConfig cfg;
    cfg.n_users = 1;
    cfg.n_train = 2;
    cfg.n_test = 1;
    cfg.n_samples_mean = 80;
    auto db = dataio::synth_database(cfg);
    CHECK_THROWS_AS(
        scenarios::run_scenario(scenarios::scenario_by_id("1"), db, small_params()),
        std::invalid_argument);
}

TEST_CASE("the mismatch sweep endpoints reproduce the pure scenarios") {
    auto base = small_db();
    auto params = small_params();
    const double fractions[] = {0.0, 50.0, 100.0};
    auto points = scenarios::mismatch_sweep(base, fractions, params);
    REQUIRE(points.size() == 3);
    CHECK(points[0].fraction == 0.0);
    CHECK(points[2].fraction == 100.0);

    auto s1 = scenarios::run_scenario(scenarios::scenario_by_id("1"), base, params);
    auto s5 = scenarios::run_scenario(scenarios::scenario_by_id("5"), base, params);
    CHECK(points[0].identification_rate_pct == s1.result.identification_rate_pct);
    CHECK(points[0].min_dcf_pct == s1.result.min_dcf_pct);
    CHECK(points[2].identification_rate_pct == s5.result.identification_rate_pct);
    CHECK(points[2].min_dcf_pct == s5.result.min_dcf_pct);

    const double bad[] = {-1.0};
    CHECK_THROWS_AS(scenarios::mismatch_sweep(base, bad, params), std::invalid_argument);
}

TEST_CASE("results table is one CSV row per scenario") {
    auto base = small_db();
    auto params = small_params();
    auto run = scenarios::run_scenario(scenarios::scenario_by_id("1"), base, params);
    auto table = scenarios::results_table({&run.result, 1});
    CHECK(table.rfind("scenario,forgery,bits,identification_pct,min_dcf_pct,eer_pct,clamped_pct"
                      "\n",
                      0) == 0);
    CHECK(table.find("\n1,random,4,100.00,") != std::string::npos);
    CHECK(table.back() == '\n');
}
