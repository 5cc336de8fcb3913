// Command-line surface: sensor curve fitting, profile inspection, database
// mapping, synthetic corpus generation, model training, identification,
// verification, the scenario matrix, the mismatch sweep, and DET export.
// Exit codes: 0 success, 1 runtime failure, 2 usage or input-format error.

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "penpress/calib.hpp"
#include "penpress/dataio.hpp"
#include "penpress/errors.hpp"
#include "penpress/eval.hpp"
#include "penpress/rng.hpp"
#include "penpress/scenarios.hpp"
#include "penpress/stylus.hpp"
#include "penpress/vq.hpp"

namespace fs = std::filesystem;
using namespace penpress;

namespace {

std::string format_number(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------- fit ------

std::vector<calib::CurvePoint> read_calibration_csv(const fs::path& path,
                                                    double nib_diameter_mm) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    const double surface = calib::nib_surface(nib_diameter_mm);
    std::vector<calib::CurvePoint> points;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "mass_g,raw_level")
                throw ParseError(path.string() + ": expected header 'mass_g,raw_level'", 1);
            continue;
        }
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError(path.string() + ": expected 'mass_g,raw_level'", line_no);
        auto parse = [&](std::string_view tok, const char* what) {
            double v = 0.0;
            auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
                throw ParseError(path.string() + ": malformed " + what + " '" +
                                     std::string(tok) + "'",
                                 line_no);
            return v;
        };
        double mass_g = parse(std::string_view(line).substr(0, comma), "mass_g");
        double raw = parse(std::string_view(line).substr(comma + 1), "raw_level");
        points.emplace_back(raw, calib::force_to_pressure(calib::mass_to_force(mass_g), surface));
    }
    if (points.empty()) throw ParseError(path.string() + ": no measurement rows", line_no);
    return points;
}

struct FitCmd {
    std::string input, model, output, name;
    double nib = 0.0;
    double raw_max = calib::kDefaultRawMax;
    double nominal_max = 0.0;
};

int cmd_fit(const FitCmd& cmd) {
    auto points = read_calibration_csv(cmd.input, cmd.nib);
    stylus::StylusProfile profile;
    profile.name = !cmd.name.empty() ? cmd.name : fs::path(cmd.output).stem().string();
    profile.raw_max = cmd.raw_max;
    profile.nib_diameter_mm = cmd.nib;
    profile.nominal_max_pressure = cmd.nominal_max;

    if (cmd.model == "log") {
        auto m = calib::fit_log(points, cmd.raw_max);
        std::cout << "model log\na1 " << format_number(m.a1) << "\na2 " << format_number(m.a2)
                  << "\nf1 " << format_number(m.f1) << "\nr_squared "
                  << format_number(m.r_squared) << "\n";
        profile.transfer = m;
    } else if (cmd.model == "ellipse") {
        auto m = calib::fit_ellipse(points, cmd.raw_max);
        std::cout << "model ellipse\nr1 " << format_number(m.r1) << "\nr2 "
                  << format_number(m.r2) << "\nf " << format_number(m.f) << "\nr_squared "
                  << format_number(m.r_squared) << "\n";
        profile.transfer = m;
    } else {
        throw std::invalid_argument("--model must be 'log' or 'ellipse'");
    }
    std::cout << "physical_max " << format_number(profile.physical_max()) << "\n";
    stylus::write_profile_file(cmd.output, profile);
    std::cout << "wrote " << cmd.output << "\n";
    return 0;
}

// ------------------------------------------------------------- profile -----

int cmd_profile_show(const std::string& name_or_path) {
    stylus::StylusProfile p = stylus::resolve_profile(name_or_path);
    std::cout << stylus::write_profile(p);
    std::cout << "physical_max " << format_number(p.physical_max()) << "\n"
              << "rescale_factor " << format_number(p.rescale_factor()) << "\n"
              << "pressure_weight_published "
              << format_number(stylus::pressure_weight(p, stylus::WeightMode::published)) << "\n"
              << "pressure_weight_exact "
              << format_number(stylus::pressure_weight(p, stylus::WeightMode::exact)) << "\n";
    return 0;
}

// ----------------------------------------------------------------- map -----

struct MapCmd {
    std::string src, dst, input_dir, output_dir;
};

int cmd_map(const MapCmd& cmd) {
    stylus::StylusProfile src, dst;
    try {
        src = stylus::resolve_profile(cmd.src);
        dst = stylus::resolve_profile(cmd.dst);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (!fs::is_directory(cmd.input_dir)) {
        std::cerr << "error: not a directory: " << cmd.input_dir << "\n";
        return 2;
    }
    fs::create_directories(cmd.output_dir);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(cmd.input_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".sig")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::size_t failed = 0;
    for (const auto& path : files) {
        try {
            dataio::Signature sig = dataio::read_signature_file(path);
            stylus::MapStats stats;
            dataio::Signature mapped = stylus::map_signature(src, dst, sig, &stats);
            dataio::write_signature_file(fs::path(cmd.output_dir) / path.filename(), mapped);
            std::cout << path.filename().string() << " clamped " << stats.n_clamped << "/"
                      << stats.n_samples << "\n";
        } catch (const std::exception& e) {
            std::cerr << path.filename().string() << ": " << e.what() << "\n";
            ++failed;
        }
    }
    if (files.empty()) {
        std::cerr << "error: no .sig files in " << cmd.input_dir << "\n";
        return 1;
    }
    return failed == 0 ? 0 : 1;
}

// --------------------------------------------------------------- synth -----

struct SynthCmd {
    dataio::SyntheticConfig cfg;
    std::string output_dir;
};

int cmd_synth(const SynthCmd& cmd) {
    dataio::Database db = dataio::synth_database(cmd.cfg);
    dataio::write_database(cmd.output_dir, db);
    std::size_t n_sigs = 0;
    for (const auto& [id, user] : db) n_sigs += user.train.size() + user.test.size();
    std::cout << "wrote " << db.size() << " users, " << n_sigs << " signatures to "
              << cmd.output_dir << "\n";
    return 0;
}

// --------------------------------------------------------------- train -----

struct TrainCmd {
    std::string input_dir, output_dir, user;
    std::string space = "raw";  // raw | physical
    std::string profile = "ink";
    std::string weight_mode = "published";
    bool no_pressure = false;
    int sections = 2;
    int bits = 6;
    std::uint64_t seed = 0;
};

stylus::WeightMode parse_weight_mode(const std::string& mode) {
    if (mode == "published") return stylus::WeightMode::published;
    if (mode == "exact") return stylus::WeightMode::exact;
    throw std::invalid_argument("weight mode must be 'published' or 'exact'");
}

int cmd_train(const TrainCmd& cmd) {
    stylus::StylusProfile profile;
    try {
        profile = stylus::resolve_profile(cmd.profile);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (cmd.space != "raw" && cmd.space != "physical")
        throw std::invalid_argument("--space must be 'raw' or 'physical'");

    vq::Weights weights;
    if (cmd.no_pressure)
        weights.p = 0.0;
    else if (cmd.space == "physical")
        weights.p = stylus::pressure_weight(profile, parse_weight_mode(cmd.weight_mode));

    dataio::Database db = dataio::load_database(cmd.input_dir);
    fs::create_directories(cmd.output_dir);
    std::size_t written = 0;
    for (const auto& [id, user] : db) {
        if (!cmd.user.empty() && id != cmd.user) continue;
        if (user.train.empty())
            throw std::runtime_error("user " + id + " has no training signatures");
        std::vector<dataio::Signature> train = user.train;
        if (cmd.space == "physical")
            for (auto& sig : train)
                for (auto& s : sig.samples) s.p = stylus::to_physical(profile, s.p);
        vq::MultiSectionModel model = vq::train_user_model(
            train, cmd.sections, cmd.bits, weights, mix_seed(cmd.seed, id));
        vq::write_model_file(fs::path(cmd.output_dir) / (id + ".vqm"), model);
        ++written;
    }
    if (written == 0) throw std::runtime_error("no matching user in " + cmd.input_dir);
    std::cout << "wrote " << written << " models to " << cmd.output_dir << "\n";
    return 0;
}

// ---------------------------------------------------- identify / verify ----

std::vector<vq::MultiSectionModel> load_models(const std::string& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".vqm")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no .vqm models in " + dir);
    std::vector<vq::MultiSectionModel> models;
    models.reserve(files.size());
    for (const auto& path : files) models.push_back(vq::read_model_file(path));
    return models;
}

int cmd_identify(const std::string& models_dir, const std::string& input, bool scores) {
    auto models = load_models(models_dir);
    dataio::Signature sig = dataio::read_signature_file(input);
    std::cout << eval::identify(models, sig) << "\n";
    if (scores)
        for (const auto& model : models)
            std::cout << model.user_id << " " << format_number(vq::score(model, sig)) << "\n";
    return 0;
}

int cmd_verify(const std::string& model_path, const std::string& input, double threshold) {
    vq::MultiSectionModel model = vq::read_model_file(model_path);
    dataio::Signature sig = dataio::read_signature_file(input);
    double s = vq::score(model, sig);
    std::cout << "score " << format_number(s) << "\n"
              << "decision " << (s <= threshold ? "accept" : "reject") << "\n";
    return 0;
}

// ------------------------------------------------------------ DET / SVG ----

std::string det_csv(const eval::DetCurve& curve) {
    auto points = eval::det_points(curve);
    std::string out = "threshold,far,frr,probit_far,probit_frr\n";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out += format_number(curve[i].threshold);
        out.push_back(',');
        out += format_number(curve[i].far);
        out.push_back(',');
        out += format_number(curve[i].frr);
        out.push_back(',');
        out += format_number(points[i].first);
        out.push_back(',');
        out += format_number(points[i].second);
        out.push_back('\n');
    }
    return out;
}

// Probit-axis DET plot: error-tradeoff polyline, the FAR=FRR diagonal, and a
// circle on the operating point that minimizes the detection cost.
std::string det_svg(const eval::DetCurve& curve, double min_dcf_threshold) {
    const double lo = eval::probit(0.0005), hi = eval::probit(0.5);  // 0.05%..50%
    const double left = 70, top = 20, size = 520;
    auto sx = [&](double p) {
        return left + (std::clamp(p, lo, hi) - lo) / (hi - lo) * size;
    };
    auto sy = [&](double p) {
        return top + (hi - std::clamp(p, lo, hi)) / (hi - lo) * size;
    };
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", v);
        return std::string(buf);
    };

    std::string svg =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"620\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n";
    svg += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(size) +
           "\" height=\"" + fmt(size) + "\" fill=\"white\" stroke=\"black\"/>\n";

    const double ticks[] = {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4};
    for (double t : ticks) {
        double px = sx(eval::probit(t)), py = sy(eval::probit(t));
        svg += "<line x1=\"" + fmt(px) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(px) +
               "\" y2=\"" + fmt(top + size) + "\" stroke=\"#ddd\"/>\n";
        svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(py) + "\" x2=\"" +
               fmt(left + size) + "\" y2=\"" + fmt(py) + "\" stroke=\"#ddd\"/>\n";
        std::string label = format_pct(100.0 * t);
        svg += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(top + size + 14) +
               "\" text-anchor=\"middle\">" + label + "</text>\n";
        svg += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(py + 4) +
               "\" text-anchor=\"end\">" + label + "</text>\n";
    }
    svg += "<text x=\"" + fmt(left + size / 2) + "\" y=\"" + fmt(top + size + 32) +
           "\" text-anchor=\"middle\">False acceptance rate (%)</text>\n";
    svg += "<text x=\"14\" y=\"" + fmt(top + size / 2) + "\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 14 " + fmt(top + size / 2) + ")\">False rejection rate (%)"
           "</text>\n";

    // Equal-error diagonal.
    svg += "<line x1=\"" + fmt(sx(lo)) + "\" y1=\"" + fmt(sy(lo)) + "\" x2=\"" + fmt(sx(hi)) +
           "\" y2=\"" + fmt(sy(hi)) + "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";

    auto points = eval::det_points(curve);
    svg += "<polyline fill=\"none\" stroke=\"#c00\" stroke-width=\"1.5\" points=\"";
    for (const auto& [pfar, pfrr] : points)
        svg += fmt(sx(pfar)) + "," + fmt(sy(pfrr)) + " ";
    svg += "\"/>\n";

    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve[i].threshold == min_dcf_threshold) {
            svg += "<circle cx=\"" + fmt(sx(points[i].first)) + "\" cy=\"" +
                   fmt(sy(points[i].second)) +
                   "\" r=\"5\" fill=\"none\" stroke=\"#00c\" stroke-width=\"1.5\"/>\n";
            break;
        }
    }
    svg += "</svg>\n";
    return svg;
}

struct DetCmd {
    std::string genuine, impostor, output_csv, output_svg;
    eval::CostParams costs;
};

std::vector<double> read_score_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    std::vector<double> scores;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        double v = 0.0;
        auto res = std::from_chars(line.data(), line.data() + line.size(), v);
        if (res.ec != std::errc{} || res.ptr != line.data() + line.size())
            throw ParseError(path.string() + ": malformed score '" + line + "'", line_no);
        scores.push_back(v);
    }
    if (scores.empty()) throw ParseError(path.string() + ": no scores", line_no);
    return scores;
}

int cmd_det(const DetCmd& cmd) {
    eval::ScoreSet scores;
    scores.genuine = read_score_file(cmd.genuine);
    scores.impostor = read_score_file(cmd.impostor);
    eval::DetCurve curve = eval::far_frr_sweep(scores);
    auto [dcf_value, dcf_threshold] = eval::min_dcf(curve, cmd.costs);
    if (!cmd.output_csv.empty()) write_text_file(cmd.output_csv, det_csv(curve));
    if (!cmd.output_svg.empty()) write_text_file(cmd.output_svg, det_svg(curve, dcf_threshold));
    std::cout << "eer_pct " << format_pct(100.0 * eval::eer(curve)) << "\n"
              << "min_dcf_pct " << format_pct(100.0 * dcf_value) << "\n"
              << "min_dcf_threshold " << format_number(dcf_threshold) << "\n";
    return 0;
}

// ---------------------------------------------------- scenario / sweep -----

struct RunCmd {
    std::string db_dir;
    std::string out_dir = "out";
    dataio::SyntheticConfig synth;
    int sections = 2;
    int bits = 6;
    std::string weight_mode = "published";
    std::string forgery = "random";
    std::string scenario_list = "1,2,3,4,5,6,7,no_pressure";
    std::string fraction_list = "0,25,50,75,100";
    eval::CostParams costs;
    std::string config_path;
};

std::string trim_ws(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

long long config_int(const std::string& key, const std::string& value) {
    long long n = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), n);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
        throw std::invalid_argument("config: key '" + key + "': expected an integer, got '" +
                                    value + "'");
    return n;
}

double config_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("config: key '" + key + "': expected a number, got '" + value +
                                "'");
}

// CLI11 only consults a config file registered on the top-level command, so
// the run commands read their flat key=value files themselves.  A key fills
// its option only when that option is absent from the command line, so flags
// always win.  Keys mirror the long option names.
void apply_run_config(const CLI::App& cli, RunCmd& cmd) {
    if (cmd.config_path.empty()) return;
    std::ifstream in(cmd.config_path);
    if (!in) throw std::invalid_argument("config: cannot open " + cmd.config_path);
    auto absent = [&cli](const char* flag) { return cli.count(flag) == 0; };
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string entry = trim_ws(line);
        if (entry.empty() || entry[0] == '#' || entry[0] == ';') continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        ": expected key=value");
        const std::string key = trim_ws(entry.substr(0, eq));
        const std::string value = trim_ws(entry.substr(eq + 1));
        if (key == "db-dir") {
            if (absent("--db-dir")) cmd.db_dir = value;
        } else if (key == "out-dir") {
            if (absent("--out-dir")) cmd.out_dir = value;
        } else if (key == "seed") {
            if (absent("--seed")) cmd.synth.seed = static_cast<std::uint64_t>(config_int(key, value));
        } else if (key == "users") {
            if (absent("--users")) cmd.synth.n_users = static_cast<int>(config_int(key, value));
        } else if (key == "train") {
            if (absent("--train")) cmd.synth.n_train = static_cast<int>(config_int(key, value));
        } else if (key == "test") {
            if (absent("--test")) cmd.synth.n_test = static_cast<int>(config_int(key, value));
        } else if (key == "samples") {
            if (absent("--samples"))
                cmd.synth.n_samples_mean = static_cast<int>(config_int(key, value));
        } else if (key == "jitter") {
            if (absent("--jitter")) cmd.synth.intra_user_jitter = config_real(key, value);
        } else if (key == "sections") {
            if (absent("--sections")) cmd.sections = static_cast<int>(config_int(key, value));
        } else if (key == "bits") {
            if (absent("--bits")) cmd.bits = static_cast<int>(config_int(key, value));
        } else if (key == "weight-mode") {
            if (absent("--weight-mode")) cmd.weight_mode = value;
        } else if (key == "forgery") {
            if (absent("--forgery")) cmd.forgery = value;
        } else if (key == "scenarios") {
            if (absent("--scenarios")) cmd.scenario_list = value;
        } else if (key == "fractions") {
            if (absent("--fractions")) cmd.fraction_list = value;
        } else if (key == "c-fr") {
            if (absent("--c-fr")) cmd.costs.c_fr = config_real(key, value);
        } else if (key == "c-fa") {
            if (absent("--c-fa")) cmd.costs.c_fa = config_real(key, value);
        } else if (key == "p-true") {
            if (absent("--p-true")) cmd.costs.p_true = config_real(key, value);
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "' (line " +
                                        std::to_string(lineno) + ")");
        }
    }
}

dataio::Database load_or_synth(const RunCmd& cmd) {
    if (!cmd.db_dir.empty()) return dataio::load_database(cmd.db_dir);
    return dataio::synth_database(cmd.synth);
}

scenarios::RunParams run_params(const RunCmd& cmd) {
    scenarios::RunParams params;
    params.sections = cmd.sections;
    params.bits = cmd.bits;
    params.weight_mode = parse_weight_mode(cmd.weight_mode);
    params.costs = cmd.costs;
    if (cmd.forgery == "skilled")
        params.skilled = true;
    else if (cmd.forgery != "random")
        throw std::invalid_argument("--forgery must be 'random' or 'skilled'");
    return params;
}

// Every run writes its effective configuration and the published curve
// constants, so a result file alone is enough to rerun the experiment.
std::string manifest_header(const RunCmd& cmd, const char* command) {
    std::string m = "#MANIFEST v1\ncommand ";
    m += command;
    m += "\ndb_dir ";
    m += cmd.db_dir.empty() ? "-" : cmd.db_dir;
    m += "\nseed " + std::to_string(cmd.synth.seed);
    m += "\nusers " + std::to_string(cmd.synth.n_users);
    m += "\ntrain " + std::to_string(cmd.synth.n_train);
    m += "\ntest " + std::to_string(cmd.synth.n_test);
    m += "\nsamples " + std::to_string(cmd.synth.n_samples_mean);
    m += "\njitter " + format_number(cmd.synth.intra_user_jitter);
    m += "\nsections " + std::to_string(cmd.sections);
    m += "\nbits " + std::to_string(cmd.bits);
    m += "\nweight_mode " + cmd.weight_mode;
    m += "\nforgery " + cmd.forgery;
    m += "\nc_fr " + format_number(cmd.costs.c_fr);
    m += "\nc_fa " + format_number(cmd.costs.c_fa);
    m += "\np_true " + format_number(cmd.costs.p_true);

    auto ink = stylus::StylusProfile::ink();
    auto plastic = stylus::StylusProfile::plastic();
    const auto& log = std::get<calib::LogSaturationModel>(ink.transfer);
    const auto& el = std::get<calib::EllipseModel>(plastic.transfer);
    m += "\nink_a1 " + format_number(log.a1) + "\nink_a2 " + format_number(log.a2) +
         "\nink_f1 " + format_number(log.f1);
    m += "\nplastic_r1 " + format_number(el.r1) + "\nplastic_r2 " + format_number(el.r2) +
         "\nplastic_f " + format_number(el.f);
    auto mode = parse_weight_mode(cmd.weight_mode);
    m += "\npressure_weight_ink " + format_number(stylus::pressure_weight(ink, mode));
    m += "\npressure_weight_plastic " + format_number(stylus::pressure_weight(plastic, mode));
    m += "\n";
    return m;
}

int cmd_scenario(const RunCmd& cmd) {
    dataio::Database db = load_or_synth(cmd);
    scenarios::RunParams params = run_params(cmd);
    fs::create_directories(cmd.out_dir);

    std::vector<scenarios::ScenarioResult> results;
    std::string manifest = manifest_header(cmd, "scenario");
    for (const std::string& id : split_csv(cmd.scenario_list)) {
        scenarios::Scenario sc = scenarios::scenario_by_id(id);
        scenarios::ScenarioRun run = scenarios::run_scenario(sc, db, params);
        results.push_back(run.result);
        std::string stem = "det_" + id + "_" + run.result.forgery;
        write_text_file(fs::path(cmd.out_dir) / (stem + ".csv"), det_csv(run.curve));
        write_text_file(fs::path(cmd.out_dir) / (stem + ".svg"),
                        det_svg(run.curve, run.min_dcf_threshold));
        manifest += "identification_pct_" + id + " " +
                    format_number(run.result.identification_rate_pct) + "\n";
        manifest += "min_dcf_pct_" + id + " " + format_number(run.result.min_dcf_pct) + "\n";
        manifest += "eer_pct_" + id + " " + format_number(run.result.eer_pct) + "\n";
        manifest += "clamped_pct_" + id + " " + format_number(run.result.clamped_pct) + "\n";
    }
    if (results.empty()) throw std::invalid_argument("no scenarios requested");

    // Observed identification gaps between the matched-normalized reference
    // and each mismatch row, for the frozen-margin record.
    auto find = [&](const char* id) -> const scenarios::ScenarioResult* {
        for (const auto& r : results)
            if (r.scenario_id == id) return &r;
        return nullptr;
    };
    if (const auto* s3 = find("3")) {
        for (const char* other : {"1", "2", "4", "5", "6", "7"}) {
            if (const auto* r = find(other))
                manifest += "gap_identification_pct_3_minus_" + r->scenario_id + " " +
                            format_number(s3->identification_rate_pct -
                                          r->identification_rate_pct) +
                            "\n";
        }
    }

    std::string table = scenarios::results_table(results);
    write_text_file(fs::path(cmd.out_dir) / "results.csv", table);
    write_text_file(fs::path(cmd.out_dir) / "manifest.txt", manifest);
    std::cout << table;
    return 0;
}

int cmd_sweep(const RunCmd& cmd) {
    dataio::Database db = load_or_synth(cmd);
    scenarios::RunParams params = run_params(cmd);
    fs::create_directories(cmd.out_dir);

    std::vector<double> fractions;
    for (const std::string& item : split_csv(cmd.fraction_list)) {
        double v = 0.0;
        auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (res.ec != std::errc{} || res.ptr != item.data() + item.size())
            throw std::invalid_argument("malformed fraction '" + item + "'");
        fractions.push_back(v);
    }
    auto points = scenarios::mismatch_sweep(db, fractions, params);

    std::string csv = "fraction,identification_pct,min_dcf_pct\n";
    for (const auto& pt : points)
        csv += format_number(pt.fraction) + "," + format_pct(pt.identification_rate_pct) + "," +
               format_pct(pt.min_dcf_pct) + "\n";
    std::string manifest = manifest_header(cmd, "sweep");
    for (const auto& pt : points) {
        manifest += "identification_pct_f" + format_number(pt.fraction) + " " +
                    format_number(pt.identification_rate_pct) + "\n";
        manifest += "min_dcf_pct_f" + format_number(pt.fraction) + " " +
                    format_number(pt.min_dcf_pct) + "\n";
    }
    write_text_file(fs::path(cmd.out_dir) / "sweep.csv", csv);
    write_text_file(fs::path(cmd.out_dir) / "manifest.txt", manifest);
    std::cout << csv;
    return 0;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stylus pressure characterization and cross-pen signature evaluation"};
    app.require_subcommand(1);
    std::function<int()> runner;

    FitCmd fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit a transfer curve to balance measurements");
    fit_cmd->add_option("--input", fit.input, "calibration CSV (mass_g,raw_level)")->required();
    fit_cmd->add_option("--model", fit.model, "curve family: log or ellipse")->required();
    fit_cmd->add_option("--nib", fit.nib, "nib diameter in mm")->required();
    fit_cmd->add_option("--output", fit.output, "profile file to write")->required();
    fit_cmd->add_option("--name", fit.name, "profile name (default: output stem)");
    fit_cmd->add_option("--raw-max", fit.raw_max, "digital full scale");
    fit_cmd->add_option("--nominal-max", fit.nominal_max,
                        "vendor nominal full-scale pressure (N/mm^2)");
    fit_cmd->callback([&] { runner = [&] { return cmd_fit(fit); }; });

    std::string profile_name;
    auto* profile_cmd = app.add_subcommand("profile", "stylus profile utilities");
    profile_cmd->require_subcommand(1);
    auto* show_cmd = profile_cmd->add_subcommand("show", "print a profile and derived values");
    show_cmd->add_option("profile", profile_name, "ink, plastic, or a profile file")->required();
    show_cmd->callback([&] { runner = [&] { return cmd_profile_show(profile_name); }; });

    MapCmd map;
    auto* map_cmd = app.add_subcommand("map", "map signature pressure between pen spaces");
    map_cmd->add_option("--src", map.src, "source profile")->required();
    map_cmd->add_option("--dst", map.dst, "destination profile")->required();
    map_cmd->add_option("--input-dir", map.input_dir, "directory of .sig files")->required();
    map_cmd->add_option("--output-dir", map.output_dir, "directory for mapped files")->required();
    map_cmd->callback([&] { runner = [&] { return cmd_map(map); }; });

    SynthCmd synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic signature database");
    synth_cmd->add_option("--output-dir", synth.output_dir, "directory to fill")->required();
    synth_cmd->add_option("--users", synth.cfg.n_users, "number of users");
    synth_cmd->add_option("--train", synth.cfg.n_train, "training signatures per user");
    synth_cmd->add_option("--test", synth.cfg.n_test, "test signatures per user");
    synth_cmd->add_option("--samples", synth.cfg.n_samples_mean, "mean signature length");
    synth_cmd->add_option("--jitter", synth.cfg.intra_user_jitter, "intra-user jitter");
    synth_cmd->add_option("--seed", synth.cfg.seed, "corpus seed");
    synth_cmd->callback([&] { runner = [&] { return cmd_synth(synth); }; });

    TrainCmd train;
    auto* train_cmd = app.add_subcommand("train", "train per-user recognizer models");
    train_cmd->add_option("--input-dir", train.input_dir, "signature database directory")
        ->required();
    train_cmd->add_option("--output-dir", train.output_dir, "directory for .vqm models")
        ->required();
    train_cmd->add_option("--user", train.user, "train only this user");
    train_cmd->add_option("--sections", train.sections, "temporal sections per signature");
    train_cmd->add_option("--bits", train.bits, "codebook bits per section");
    train_cmd->add_option("--space", train.space, "pressure space: raw or physical");
    train_cmd->add_option("--profile", train.profile, "stylus profile for physical space");
    train_cmd->add_option("--weight-mode", train.weight_mode, "published or exact");
    train_cmd->add_flag("--no-pressure", train.no_pressure, "zero the pressure weight");
    train_cmd->add_option("--seed", train.seed, "training seed");
    train_cmd->callback([&] { runner = [&] { return cmd_train(train); }; });

    std::string identify_models, identify_input;
    bool identify_scores = false;
    auto* identify_cmd = app.add_subcommand("identify", "closed-set identification");
    identify_cmd->add_option("--models-dir", identify_models, "directory of .vqm models")
        ->required();
    identify_cmd->add_option("--input", identify_input, "signature file")->required();
    identify_cmd->add_flag("--scores", identify_scores, "also print every model's score");
    identify_cmd->callback([&] {
        runner = [&] { return cmd_identify(identify_models, identify_input, identify_scores); };
    });

    std::string verify_model, verify_input;
    double verify_threshold = 0.0;
    auto* verify_cmd = app.add_subcommand("verify", "score one signature against one model");
    verify_cmd->add_option("--model", verify_model, "model file")->required();
    verify_cmd->add_option("--input", verify_input, "signature file")->required();
    verify_cmd->add_option("--threshold", verify_threshold, "accept at or below this score")
        ->required();
    verify_cmd->callback([&] {
        runner = [&] { return cmd_verify(verify_model, verify_input, verify_threshold); };
    });

    DetCmd det;
    auto* det_cmd = app.add_subcommand("det", "error-tradeoff curve from score files");
    det_cmd->add_option("--genuine", det.genuine, "genuine scores, one per line")->required();
    det_cmd->add_option("--impostor", det.impostor, "impostor scores, one per line")->required();
    det_cmd->add_option("--output-csv", det.output_csv, "curve CSV path");
    det_cmd->add_option("--output-svg", det.output_svg, "plot SVG path");
    det_cmd->add_option("--c-fr", det.costs.c_fr, "false rejection cost");
    det_cmd->add_option("--c-fa", det.costs.c_fa, "false acceptance cost");
    det_cmd->add_option("--p-true", det.costs.p_true, "genuine prior");
    det_cmd->callback([&] { runner = [&] { return cmd_det(det); }; });

    RunCmd run;
    auto add_run_options = [&run](CLI::App* cmd) {
        cmd->add_option("--db-dir", run.db_dir, "signature database (default: synthesize)");
        cmd->add_option("--out-dir", run.out_dir, "output directory");
        cmd->add_option("--seed", run.synth.seed, "synthetic corpus seed");
        cmd->add_option("--users", run.synth.n_users, "synthetic user count");
        cmd->add_option("--train", run.synth.n_train, "training signatures per user");
        cmd->add_option("--test", run.synth.n_test, "test signatures per user");
        cmd->add_option("--samples", run.synth.n_samples_mean, "mean signature length");
        cmd->add_option("--jitter", run.synth.intra_user_jitter, "intra-user jitter");
        cmd->add_option("--sections", run.sections, "temporal sections per signature");
        cmd->add_option("--bits", run.bits, "codebook bits per section");
        cmd->add_option("--weight-mode", run.weight_mode, "published or exact");
        cmd->add_option("--c-fr", run.costs.c_fr, "false rejection cost");
        cmd->add_option("--c-fa", run.costs.c_fa, "false acceptance cost");
        cmd->add_option("--p-true", run.costs.p_true, "genuine prior");
        // Both run commands accept the whole vocabulary so one config file
        // can drive either; each uses only the keys it needs.
        cmd->add_option("--scenarios", run.scenario_list,
                        "comma list of 1..7 and no_pressure (scenario command)");
        cmd->add_option("--forgery", run.forgery, "random or skilled (scenario command)");
        cmd->add_option("--fractions", run.fraction_list,
                        "comma list of mismatch percents (sweep command)");
        cmd->add_option("--config", run.config_path,
                        "flat key=value config file; flags take precedence");
    };
    auto* scenario_cmd =
        app.add_subcommand("scenario", "run match/mismatch scenarios and emit tables");
    add_run_options(scenario_cmd);
    scenario_cmd->callback([&] {
        runner = [&] {
            apply_run_config(*scenario_cmd, run);
            return cmd_scenario(run);
        };
    });

    auto* sweep_cmd = app.add_subcommand("sweep", "partial-mismatch identification sweep");
    add_run_options(sweep_cmd);
    sweep_cmd->callback([&] {
        runner = [&] {
            apply_run_config(*sweep_cmd, run);
            return cmd_sweep(run);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return guarded(runner);
}
