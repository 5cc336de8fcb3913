#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "penpress/stylus.hpp"

using namespace penpress;
using stylus::StylusProfile;

// Reference outputs below were computed independently from the closed-form
// curve definitions at full double precision and frozen here.

TEST_CASE("built-in profiles carry the fitted device constants") {
    auto ink = StylusProfile::ink();
    auto plastic = StylusProfile::plastic();
    CHECK(ink.name == "ink");
    CHECK(plastic.name == "plastic");
    CHECK(ink.raw_max == 1024.0);
    CHECK(plastic.raw_max == 1024.0);
    CHECK(ink.nib_diameter_mm == 0.319);
    CHECK(plastic.nib_diameter_mm == 0.45);
    CHECK(ink.nominal_max_pressure == 45.0);
    CHECK(plastic.nominal_max_pressure == 25.0);
    CHECK(ink.rescale_factor() == 21.5761);
    CHECK(plastic.rescale_factor() == 37.8450);
}

TEST_CASE("normalize matches the frozen curve values") {
    auto ink = StylusProfile::ink();
    auto plastic = StylusProfile::plastic();
    CHECK(stylus::normalize(ink, 0.0) == 0.0);
    CHECK(stylus::normalize(ink, 1024.0) ==
          doctest::Approx(1023.9170547391334).epsilon(1e-13));
    CHECK(stylus::normalize(plastic, 512.0) ==
          doctest::Approx(163.1820074567294).epsilon(1e-13));
    CHECK(stylus::normalize(plastic, 1024.0) ==
          doctest::Approx(1024.0044469465581).epsilon(1e-13));
}

TEST_CASE("denormalize is the exact analytic inverse") {
    auto ink = StylusProfile::ink();
    auto plastic = StylusProfile::plastic();
    CHECK(stylus::denormalize(plastic, 163.1820074567294) ==
          doctest::Approx(512.0).epsilon(1e-10));
    CHECK(stylus::denormalize(ink, stylus::normalize(ink, 300.0)) ==
          doctest::Approx(300.0).epsilon(1e-12));
    CHECK(stylus::denormalize(ink, 0.0) == 0.0);
}

TEST_CASE("round trip error stays below 1e-6 across the full grid") {
    for (const auto& profile : {StylusProfile::ink(), StylusProfile::plastic()}) {
        double worst = 0.0;
        for (int w = 0; w <= 1024; ++w) {
            double back = stylus::denormalize(profile, stylus::normalize(profile, w));
            worst = std::max(worst, std::abs(back - w));
        }
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("normalize is strictly increasing and convex") {
    for (const auto& profile : {StylusProfile::ink(), StylusProfile::plastic()}) {
        double prev = stylus::normalize(profile, 0.0);
        double prev_diff = -1.0;
        for (int w = 1; w <= 1024; ++w) {
            double cur = stylus::normalize(profile, w);
            REQUIRE(cur > prev);
            double diff = cur - prev;
            if (prev_diff >= 0.0)
                REQUIRE(diff >= prev_diff - 1e-9);  // saturation: slope only grows
            prev_diff = diff;
            prev = cur;
        }
    }
}

TEST_CASE("inputs outside the sensor range are domain errors") {
    auto ink = StylusProfile::ink();
    CHECK_THROWS_AS(stylus::normalize(ink, -0.5), std::domain_error);
    CHECK_THROWS_AS(stylus::normalize(ink, 1024.5), std::domain_error);
    CHECK_THROWS_AS(stylus::denormalize(ink, -1.0), std::domain_error);
    CHECK_THROWS_AS(stylus::denormalize(ink, stylus::normalize(ink, 1024.0) + 0.1),
                    std::domain_error);
    CHECK_THROWS_AS(stylus::to_physical(ink, 2000.0), std::domain_error);
}

TEST_CASE("physical pressure endpoints and ratio") {
    auto ink = StylusProfile::ink();
    auto plastic = StylusProfile::plastic();
    CHECK(stylus::to_physical(ink, 0.0) == 0.0);
    CHECK(stylus::to_physical(ink, 1024.0) ==
          doctest::Approx(47.45607661899664).epsilon(1e-13));
    CHECK(stylus::to_physical(plastic, 1024.0) ==
          doctest::Approx(27.057853004268946).epsilon(1e-13));
    CHECK(ink.physical_max() == doctest::Approx(47.45607661899664).epsilon(1e-13));
    CHECK(plastic.physical_max() == doctest::Approx(27.057853004268946).epsilon(1e-13));
    CHECK(plastic.physical_max() < ink.physical_max());
    CHECK(ink.physical_max() / plastic.physical_max() ==
          doctest::Approx(1.7538744338477057).epsilon(1e-13));
}

TEST_CASE("cross-pen map hits the frozen reference points") {
    auto ink = StylusProfile::ink();
    auto plastic = StylusProfile::plastic();
    CHECK(stylus::map_pressure(ink, plastic, 512.0) ==
          doctest::Approx(815.6109353802598).epsilon(1e-12));
    CHECK(stylus::map_pressure(ink, plastic, 250.0) ==
          doctest::Approx(560.4616426938737).epsilon(1e-12));
    CHECK(stylus::map_pressure(ink, plastic, 0.0) == 0.0);
    // ink levels past the plastic pen's physical ceiling saturate
    CHECK(stylus::map_pressure(ink, plastic, 1000.0) == 1024.0);
    CHECK(stylus::map_pressure(ink, plastic, 824.87) == 1024.0);
    CHECK(stylus::map_pressure(ink, plastic, 824.86) < 1024.0);
}

TEST_CASE("mapping to the same pen is the identity") {
    auto ink = StylusProfile::ink();
    for (int w = 0; w <= 1024; w += 64)
        CHECK(stylus::map_pressure(ink, ink, w) == doctest::Approx(w).epsilon(1e-9));
}

TEST_CASE("the map preserves physical pressure up to saturation") {
    auto ink = StylusProfile::ink();
    auto plastic = StylusProfile::plastic();
    for (int w = 0; w <= 1024; w += 16) {
        double mapped = stylus::map_pressure(ink, plastic, w);
        double expected = std::min(stylus::to_physical(ink, w), plastic.physical_max());
        CHECK(stylus::to_physical(plastic, mapped) == doctest::Approx(expected).epsilon(1e-9));
        double back = stylus::map_pressure(plastic, ink, mapped);
        if (stylus::to_physical(ink, w) < plastic.physical_max())
            CHECK(back == doctest::Approx(w).epsilon(1e-6));
    }
}

TEST_CASE("map_signature touches only the pressure channel and tallies clamps") {
    auto ink = StylusProfile::ink();
    auto plastic = StylusProfile::plastic();
    dataio::Signature sig;
    sig.user_id = "u001";
    sig.session_id = "s";
    sig.samples = {
        {0.0, 101.0, 202.0, 512.0, 1801.0, 601.0},
        {1.0, 103.0, 204.0, 900.0, 1803.0, 603.0},
        {2.0, 105.0, 206.0, 250.0, 1805.0, 605.0},
    };
    stylus::MapStats stats;
    auto mapped = stylus::map_signature(ink, plastic, sig, &stats);
    CHECK(stats.n_samples == 3);
    CHECK(stats.n_clamped == 1);
    REQUIRE(mapped.samples.size() == 3);
    CHECK(mapped.samples[0].p == doctest::Approx(815.6109353802598).epsilon(1e-12));
    CHECK(mapped.samples[1].p == 1024.0);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(mapped.samples[i].t == sig.samples[i].t);
        CHECK(mapped.samples[i].x == sig.samples[i].x);
        CHECK(mapped.samples[i].y == sig.samples[i].y);
        CHECK(mapped.samples[i].azimuth == sig.samples[i].azimuth);
        CHECK(mapped.samples[i].altitude == sig.samples[i].altitude);
    }
    // stats accumulate across calls
    stylus::map_signature(ink, plastic, sig, &stats);
    CHECK(stats.n_samples == 6);
    CHECK(stats.n_clamped == 2);

    sig.samples[1].p = 2000.0;
    CHECK_THROWS_AS(stylus::map_signature(ink, plastic, sig), std::domain_error);
}

TEST_CASE("pressure weight restores full-scale influence") {
    auto ink = StylusProfile::ink();
    auto plastic = StylusProfile::plastic();
    CHECK(stylus::pressure_weight(ink) == doctest::Approx(1024.0 / 45.0).epsilon(1e-13));
    CHECK(stylus::pressure_weight(plastic) == doctest::Approx(1024.0 / 25.0).epsilon(1e-13));
    CHECK(stylus::pressure_weight(ink, stylus::WeightMode::exact) ==
          doctest::Approx(21.577847832243542).epsilon(1e-13));
    CHECK(stylus::pressure_weight(plastic, stylus::WeightMode::exact) ==
          doctest::Approx(37.84483565042808).epsilon(1e-13));

    // without a vendor nominal, published mode rounds the fitted maximum
    auto anon = ink;
    anon.nominal_max_pressure = 0.0;
    CHECK(stylus::pressure_weight(anon) == doctest::Approx(1024.0 / 47.0).epsilon(1e-13));
}

TEST_CASE("profile text round trip is exact") {
    for (const auto& profile : {StylusProfile::ink(), StylusProfile::plastic()}) {
        auto back = stylus::parse_profile(stylus::write_profile(profile));
        CHECK(back.name == profile.name);
        CHECK(back.raw_max == profile.raw_max);
        CHECK(back.nib_diameter_mm == profile.nib_diameter_mm);
        CHECK(back.nominal_max_pressure == profile.nominal_max_pressure);
        CHECK(back.physical_max() == profile.physical_max());
        CHECK(back.rescale_factor() == profile.rescale_factor());
        CHECK(stylus::normalize(back, 512.0) == stylus::normalize(profile, 512.0));
    }
}

TEST_CASE("profile parser rejects broken documents") {
    CHECK_THROWS_AS(stylus::parse_profile("#WRONG v1\n"), ParseError);
    std::string good = stylus::write_profile(StylusProfile::ink());
    CHECK_THROWS_AS(stylus::parse_profile(good + "name twice\n"), ParseError);
    CHECK_THROWS_AS(stylus::parse_profile(good + "mystery 1\n"), ParseError);
    CHECK_THROWS_AS(stylus::parse_profile("#PROFILE v1\nname x\nmodel log\n"), ParseError);
    // a log curve that saturates inside the raw range cannot be normalized
    CHECK_THROWS_AS(
        stylus::parse_profile("#PROFILE v1\nname x\nmodel log\na1 1000\na2 0.05\nf1 20\n"
                              "raw_max 1024\nnib_diameter_mm 0.3\n"),
        ParseError);
}

TEST_CASE("profile files resolve by name or path") {
    CHECK(stylus::resolve_profile("ink").name == "ink");
    CHECK(stylus::resolve_profile("plastic").name == "plastic");
    auto dir = std::filesystem::temp_directory_path() / "penpress_tests" / "profiles";
    std::filesystem::create_directories(dir);
    auto path = dir / "custom.profile";
    auto custom = StylusProfile::ink();
    custom.name = "custom";
    stylus::write_profile_file(path, custom);
    CHECK(stylus::resolve_profile(path.string()).name == "custom");
    CHECK(stylus::read_profile_file(path).physical_max() == custom.physical_max());
    CHECK_THROWS_AS(stylus::resolve_profile((dir / "absent.profile").string()),
                    std::runtime_error);
}
