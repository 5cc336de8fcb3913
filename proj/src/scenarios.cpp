#include "penpress/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "penpress/rng.hpp"

namespace penpress::scenarios {

namespace {

const stylus::StylusProfile& profile_of(Pen pen) {
    static const stylus::StylusProfile ink = stylus::StylusProfile::ink();
    static const stylus::StylusProfile plastic = stylus::StylusProfile::plastic();
    return pen == Pen::ink ? ink : plastic;
}

// One side's transform: base ink raw data -> the pen's raw space (via the
// cross-stylus map for plastic), then optionally to physical pressure units.
dataio::Signature transform_signature(const dataio::Signature& sig, Pen pen, bool normalized,
                                      stylus::MapStats* stats) {
    dataio::Signature out =
        pen == Pen::plastic
            ? stylus::map_signature(profile_of(Pen::ink), profile_of(Pen::plastic), sig, stats)
            : sig;
    if (normalized) {
        const stylus::StylusProfile& pr = profile_of(pen);
        for (auto& s : out.samples) s.p = stylus::to_physical(pr, s.p);
    }
    return out;
}

std::vector<dataio::Signature> transform_all(const std::vector<dataio::Signature>& sigs, Pen pen,
                                             bool normalized, stylus::MapStats* stats) {
    std::vector<dataio::Signature> out;
    out.reserve(sigs.size());
    for (const auto& sig : sigs) out.push_back(transform_signature(sig, pen, normalized, stats));
    return out;
}

const char* pen_name(Pen pen) { return pen == Pen::ink ? "ink" : "plastic"; }

// Model seeds depend only on the training variant, so scenarios sharing a
// train side (1/5, 2/7, 3/6, the sweep) train byte-identical models.
std::uint64_t model_seed(const Scenario& sc, const RunParams& rp, const std::string& user) {
    std::string tag = std::string("lbg/") + pen_name(sc.train_pen) +
                      (sc.normalized ? "-norm" : "-raw") + "/s" + std::to_string(rp.sections) +
                      "/b" + std::to_string(rp.bits) + "/" + user;
    return mix_seed(0, tag);
}

void append_pct(std::string& out, double pct) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", pct);
    out += buf;
}

}  // namespace

std::span<const Scenario> all_scenarios() {
    static const std::vector<Scenario> table = {
        {"1", Pen::ink, Pen::ink, false, true},
        {"2", Pen::ink, Pen::ink, true, true},
        {"3", Pen::plastic, Pen::plastic, true, true},
        {"4", Pen::plastic, Pen::ink, false, true},
        {"5", Pen::ink, Pen::plastic, false, true},
        {"6", Pen::plastic, Pen::ink, true, true},
        {"7", Pen::ink, Pen::plastic, true, true},
        {"no_pressure", Pen::ink, Pen::ink, false, false},
    };
    return table;
}

Scenario scenario_by_id(const std::string& id) {
    for (const Scenario& sc : all_scenarios())
        if (sc.id == id) return sc;
    throw std::invalid_argument("unknown scenario '" + id +
                                "' (expected 1..7 or no_pressure)");
}

ScenarioData build_scenario_data(const Scenario& scenario, const dataio::Database& base) {
    ScenarioData out;
    stylus::MapStats stats;
    for (const auto& [user, data] : base) {
        dataio::UserData transformed;
        transformed.train =
            transform_all(data.train, scenario.train_pen, scenario.normalized, &stats);
        transformed.test =
            transform_all(data.test, scenario.test_pen, scenario.normalized, &stats);
        transformed.forgeries =
            transform_all(data.forgeries, scenario.test_pen, scenario.normalized, &stats);
        out.db.emplace(user, std::move(transformed));
    }
    out.n_mapped_samples = stats.n_samples;
    out.n_clamped_samples = stats.n_clamped;
    return out;
}

vq::Weights scenario_weights(const Scenario& scenario, stylus::WeightMode mode) {
    vq::Weights w;
    if (!scenario.use_pressure)
        w.p = 0.0;
    else if (scenario.normalized)
        w.p = stylus::pressure_weight(profile_of(scenario.train_pen), mode);
    return w;
}

ScenarioRun run_scenario(const Scenario& scenario, const dataio::Database& base,
                         const RunParams& params) {
    if (base.size() < 2) throw std::invalid_argument("run_scenario: need at least 2 users");
    ScenarioData data = build_scenario_data(scenario, base);
    vq::Weights weights = scenario_weights(scenario, params.weight_mode);

    std::vector<vq::MultiSectionModel> models;
    models.reserve(data.db.size());
    for (const auto& [user, ud] : data.db) {
        if (ud.train.empty())
            throw std::invalid_argument("run_scenario: user " + user +
                                        " has no training signatures");
        if (ud.test.empty())
            throw std::invalid_argument("run_scenario: user " + user + " has no test signatures");
        models.push_back(vq::train_user_model(ud.train, params.sections, params.bits, weights,
                                              model_seed(scenario, params, user)));
    }

    // Score every test signature against every model; the same matrix yields
    // the identification decisions and the genuine/random-impostor trials.
    eval::ScoreSet scores;
    std::size_t correct = 0, trials = 0;
    for (const auto& [owner, ud] : data.db) {
        for (const auto& sig : ud.test) {
            double own_score = 0.0;
            const std::string* best_user = nullptr;
            double best_score = 0.0;
            for (const auto& model : models) {
                double s = vq::score(model, sig);
                if (model.user_id == owner)
                    own_score = s;
                else if (!params.skilled)
                    scores.impostor.push_back(s);
                if (!best_user || s < best_score ||
                    (s == best_score && model.user_id < *best_user)) {
                    best_user = &model.user_id;
                    best_score = s;
                }
            }
            scores.genuine.push_back(own_score);
            ++trials;
            if (*best_user == owner) ++correct;
        }
    }
    if (params.skilled) {
        for (const auto& model : models) {
            const auto& forgeries = data.db.at(model.user_id).forgeries;
            for (const auto& sig : forgeries) scores.impostor.push_back(vq::score(model, sig));
        }
        if (scores.impostor.empty())
            throw std::runtime_error("run_scenario: skilled forgery trials requested but the "
                                     "database has no forgery signatures");
    }

    ScenarioRun run;
    run.curve = eval::far_frr_sweep(scores);
    auto [dcf_value, dcf_threshold] = eval::min_dcf(run.curve, params.costs);
    run.min_dcf_threshold = dcf_threshold;
    run.result.scenario_id = scenario.id;
    run.result.forgery = params.skilled ? "skilled" : "random";
    run.result.bits = params.bits;
    run.result.identification_rate_pct =
        100.0 * static_cast<double>(correct) / static_cast<double>(trials);
    run.result.min_dcf_pct = 100.0 * dcf_value;
    run.result.eer_pct = 100.0 * eval::eer(run.curve);
    run.result.clamped_pct =
        data.n_mapped_samples == 0
            ? 0.0
            : 100.0 * static_cast<double>(data.n_clamped_samples) /
                  static_cast<double>(data.n_mapped_samples);
    run.result.n_genuine = scores.genuine.size();
    run.result.n_impostor = scores.impostor.size();
    return run;
}

std::vector<MismatchSweepPoint> mismatch_sweep(const dataio::Database& base,
                                               std::span<const double> fractions,
                                               const RunParams& params) {
    if (base.size() < 2) throw std::invalid_argument("mismatch_sweep: need at least 2 users");
    for (double f : fractions)
        if (!(f >= 0.0 && f <= 100.0))
            throw std::invalid_argument("mismatch_sweep: fraction outside [0,100]");

    const Scenario matched = scenario_by_id("1");
    vq::Weights weights = scenario_weights(matched, params.weight_mode);

    // Train once on the matched (ink raw) side; precompute both test variants.
    std::vector<vq::MultiSectionModel> models;
    std::vector<std::string> users;
    std::vector<const std::vector<dataio::Signature>*> matched_tests;
    std::vector<std::vector<dataio::Signature>> mapped_tests;
    for (const auto& [user, ud] : base) {
        if (ud.train.empty() || ud.test.empty())
            throw std::invalid_argument("mismatch_sweep: user " + user +
                                        " is missing train or test signatures");
        models.push_back(vq::train_user_model(ud.train, params.sections, params.bits, weights,
                                              model_seed(matched, params, user)));
        users.push_back(user);
        matched_tests.push_back(&ud.test);
        mapped_tests.push_back(transform_all(ud.test, Pen::plastic, false, nullptr));
    }

    std::vector<MismatchSweepPoint> points;
    points.reserve(fractions.size());
    for (double f : fractions) {
        const std::size_t switched =
            static_cast<std::size_t>(f * static_cast<double>(users.size()) / 100.0);
        eval::ScoreSet scores;
        std::size_t correct = 0, trials = 0;
        for (std::size_t u = 0; u < users.size(); ++u) {
            const auto& tests = u < switched ? mapped_tests[u] : *matched_tests[u];
            for (const auto& sig : tests) {
                const std::string* best_user = nullptr;
                double best_score = 0.0, own_score = 0.0;
                for (const auto& model : models) {
                    double s = vq::score(model, sig);
                    if (model.user_id == users[u])
                        own_score = s;
                    else
                        scores.impostor.push_back(s);
                    if (!best_user || s < best_score ||
                        (s == best_score && model.user_id < *best_user)) {
                        best_user = &model.user_id;
                        best_score = s;
                    }
                }
                scores.genuine.push_back(own_score);
                ++trials;
                if (*best_user == users[u]) ++correct;
            }
        }
        MismatchSweepPoint pt;
        pt.fraction = f;
        pt.identification_rate_pct =
            100.0 * static_cast<double>(correct) / static_cast<double>(trials);
        pt.min_dcf_pct =
            100.0 * eval::min_dcf(eval::far_frr_sweep(scores), params.costs).first;
        points.push_back(pt);
    }
    return points;
}

std::string results_table(std::span<const ScenarioResult> results) {
    std::string out =
        "scenario,forgery,bits,identification_pct,min_dcf_pct,eer_pct,clamped_pct\n";
    for (const ScenarioResult& r : results) {
        out += r.scenario_id;
        out.push_back(',');
        out += r.forgery;
        out.push_back(',');
        out += std::to_string(r.bits);
        out.push_back(',');
        append_pct(out, r.identification_rate_pct);
        out.push_back(',');
        append_pct(out, r.min_dcf_pct);
        out.push_back(',');
        append_pct(out, r.eer_pct);
        out.push_back(',');
        append_pct(out, r.clamped_pct);
        out.push_back('\n');
    }
    return out;
}

}  // namespace penpress::scenarios
