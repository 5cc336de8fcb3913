// Drives the installed CLI binary end to end through a temp directory:
// synth -> train -> identify/verify -> fit -> profile -> map -> scenario ->
// sweep -> det, plus the documented exit codes on bad input.
// Usage: cli_flow <path-to-penpress-binary>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "penpress/calib.hpp"
#include "penpress/stylus.hpp"

namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::string g_bin;
fs::path g_dir;

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    fs::path out_file = g_dir / "stdout.txt";
    std::string cmd = g_bin + " " + args + " > " + out_file.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    RunResult r;
    if (WIFEXITED(status)) r.code = WEXITSTATUS(status);
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

void expect(bool ok, const std::string& what, const RunResult* r = nullptr) {
    if (ok) {
        std::printf("ok: %s\n", what.c_str());
    } else {
        ++g_failures;
        std::printf("FAILED: %s\n", what.c_str());
        if (r) std::printf("  exit %d, output:\n%s\n", r->code, r->out.c_str());
    }
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// first whitespace token after `key ` on its own line
std::string value_after(const std::string& text, const std::string& key) {
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line))
        if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: cli_flow <penpress-binary>\n");
        return 2;
    }
    g_bin = argv[1];
    g_dir = fs::temp_directory_path() / "penpress_cli_flow";
    fs::remove_all(g_dir);
    fs::create_directories(g_dir);
    const std::string dir = g_dir.string();

    // --- help and usage errors ---------------------------------------------
    auto r = run("--help");
    expect(r.code == 0, "--help exits 0", &r);
    r = run("frobnicate");
    expect(r.code == 2, "unknown subcommand exits 2", &r);
    r = run("fit --no-such-flag");
    expect(r.code == 2, "unknown flag exits 2", &r);

    // --- synth --------------------------------------------------------------
    r = run("synth --output-dir " + dir + "/db --users 6 --train 3 --test 2 --samples 80"
            " --seed 11");
    expect(r.code == 0 && r.out.find("6 users") != std::string::npos, "synth writes a corpus",
           &r);
    expect(fs::exists(g_dir / "db" / "u001_train-1.sig"), "corpus files are on disk");

    // --- train / identify / verify ------------------------------------------
    r = run("train --input-dir " + dir + "/db --output-dir " + dir + "/models --sections 2"
            " --bits 4");
    expect(r.code == 0, "train writes models", &r);
    expect(fs::exists(g_dir / "models" / "u003.vqm"), "one model file per user");

    r = run("identify --models-dir " + dir + "/models --input " + dir +
            "/db/u004_test-1.sig");
    expect(r.code == 0 && r.out.rfind("u004\n", 0) == 0, "identify names the writer", &r);

    r = run("verify --model " + dir + "/models/u002.vqm --input " + dir +
            "/db/u002_test-2.sig --threshold 1e9");
    expect(r.code == 0 && r.out.find("decision accept") != std::string::npos,
           "verify accepts under a huge threshold", &r);
    r = run("verify --model " + dir + "/models/u002.vqm --input " + dir +
            "/db/u002_test-2.sig --threshold 0");
    expect(r.code == 0 && r.out.find("decision reject") != std::string::npos,
           "verify rejects under threshold 0", &r);

    r = run("identify --models-dir " + dir + "/empty --input " + dir + "/db/u004_test-1.sig");
    expect(r.code == 1, "identify with no models exits 1", &r);

    // --- fit from a generated calibration table ------------------------------
    {
        auto ink = penpress::stylus::StylusProfile::ink();
        double surface = penpress::calib::nib_surface(0.319);
        std::ofstream csv(g_dir / "calib.csv");
        csv << std::setprecision(17) << "mass_g,raw_level\n";
        for (int i = 1; i <= 20; ++i) {
            double w = 1024.0 * i / 20.0;
            double pressure = penpress::stylus::to_physical(ink, w);
            double mass_g = pressure * surface / penpress::calib::kGravityMps2 * 1000.0;
            csv << mass_g << "," << w << "\n";
        }
    }
    r = run("fit --input " + dir + "/calib.csv --model log --nib 0.319 --output " + dir +
            "/fitted.profile --name refit --nominal-max 45");
    expect(r.code == 0, "fit converges on clean balance data", &r);
    {
        double a1 = std::atof(value_after(r.out, "a1").c_str());
        expect(std::abs(a1 - 1148.6344) / 1148.6344 < 1e-3,
               "fitted a1 within 0.1% of the device constant", &r);
    }
    r = run("profile show " + dir + "/fitted.profile");
    expect(r.code == 0 && value_after(r.out, "name") == "refit", "profile show round-trips",
           &r);
    r = run("profile show plastic");
    expect(r.code == 0 && value_after(r.out, "model") == "ellipse", "built-in profile by name",
           &r);

    {
        std::ofstream bad(g_dir / "bad.csv");
        bad << "mass_g,raw_level\n12,34\nbogus,56\n";
    }
    r = run("fit --input " + dir + "/bad.csv --model log --nib 0.319 --output " + dir +
            "/x.profile");
    expect(r.code == 2 && r.out.find("line 3") != std::string::npos,
           "malformed calibration CSV exits 2 with the line number", &r);

    // --- map ------------------------------------------------------------------
    r = run("map --src ink --dst plastic --input-dir " + dir + "/db --output-dir " + dir +
            "/db_plastic");
    expect(r.code == 0, "map converts a directory", &r);
    expect(fs::exists(g_dir / "db_plastic" / "u001_train-1.sig"), "mapped files mirror names");
    expect(r.out.find("clamped") != std::string::npos, "map reports clamp counts");
    r = run("map --src ink --dst " + dir + "/missing.profile --input-dir " + dir +
            "/db --output-dir " + dir + "/nowhere");
    expect(r.code == 2, "missing destination profile exits 2", &r);

    // --- scenario matrix via config file --------------------------------------
    {
        std::ofstream cfg(g_dir / "run.cfg");
        cfg << "# tiny matrix for the workflow test\n"
            << "seed=11\nusers=6\ntrain=3\ntest=2\nsamples=80\n"
            << "sections=2\nbits=4\n"
            << "scenarios=1,5,no_pressure\n"
            << "out-dir=" << dir << "/out\n";
    }
    r = run("scenario --config " + dir + "/run.cfg");
    expect(r.code == 0, "scenario matrix runs from a config file", &r);
    expect(r.out.rfind("scenario,forgery,bits,", 0) == 0, "results table goes to stdout");
    {
        std::string results = slurp(g_dir / "out" / "results.csv");
        expect(results.find("\n1,random,4,") != std::string::npos, "results.csv has scenario 1");
        expect(results.find("\nno_pressure,random,4,") != std::string::npos,
               "results.csv has the no-pressure row");
        std::string manifest = slurp(g_dir / "out" / "manifest.txt");
        expect(value_after(manifest, "seed") == "11", "manifest records the seed");
        expect(!value_after(manifest, "identification_pct_5").empty(),
               "manifest records per-scenario results");
        expect(fs::exists(g_dir / "out" / "det_1_random.csv") &&
                   fs::exists(g_dir / "out" / "det_1_random.svg"),
               "per-scenario DET csv+svg are written");
        std::string det = slurp(g_dir / "out" / "det_1_random.csv");
        expect(det.rfind("threshold,far,frr,probit_far,probit_frr\n", 0) == 0,
               "DET csv has the documented columns");
        std::string svg = slurp(g_dir / "out" / "det_1_random.svg");
        expect(svg.find("<svg") != std::string::npos &&
                   svg.find("polyline") != std::string::npos,
               "DET svg contains a curve");
    }
    // flags override the config file
    r = run("scenario --config " + dir + "/run.cfg --scenarios 1 --out-dir " + dir + "/out2");
    expect(r.code == 0, "flags override config values", &r);
    {
        std::string results = slurp(g_dir / "out2" / "results.csv");
        expect(results.find("\n5,") == std::string::npos, "overridden scenario list is used");
    }
    {
        std::ofstream cfg(g_dir / "broken.cfg");
        cfg << "users=6\nnonsense_key=1\n";
    }
    r = run("scenario --config " + dir + "/broken.cfg");
    expect(r.code == 2, "unknown config key exits 2", &r);

    // --- sweep -----------------------------------------------------------------
    r = run("sweep --config " + dir + "/run.cfg --fractions 0,100 --out-dir " + dir +
            "/sweep_out");
    expect(r.code == 0, "sweep runs", &r);
    {
        std::string csv = slurp(g_dir / "sweep_out" / "sweep.csv");
        expect(csv.rfind("fraction,identification_pct,min_dcf_pct\n", 0) == 0 &&
                   csv.find("\n100,") != std::string::npos,
               "sweep.csv has both endpoints");
    }

    // --- det from raw score files ------------------------------------------------
    {
        std::ofstream gen(g_dir / "genuine.txt");
        gen << "# genuine\n1.0\n3.0\n";
        std::ofstream imp(g_dir / "impostor.txt");
        imp << "2.0\n4.0\n";
    }
    r = run("det --genuine " + dir + "/genuine.txt --impostor " + dir +
            "/impostor.txt --output-csv " + dir + "/det.csv --output-svg " + dir + "/det.svg");
    expect(r.code == 0 && value_after(r.out, "eer_pct") == "50.00" &&
               value_after(r.out, "min_dcf_pct") == "25.00",
           "det reports the textbook symmetric-set numbers", &r);
    expect(fs::exists(g_dir / "det.csv") && fs::exists(g_dir / "det.svg"),
           "det writes csv and svg");

    std::printf("%d failures\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
