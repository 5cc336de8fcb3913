#include "penpress/stylus.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "penpress/errors.hpp"

namespace penpress::stylus {

namespace {

void append_number(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

[[noreturn]] void domain_fail(const char* op, const char* what, double v) {
    std::string msg = std::string(op) + ": " + what + " ";
    append_number(msg, v);
    msg += " outside domain";
    throw std::domain_error(msg);
}

double physical_of(const StylusProfile& pr, double w) {
    return std::visit([w](const auto& m) { return m.physical(w); }, pr.transfer);
}

// Inverse of the physical curve; caller guarantees p in [0, physical_max].
double physical_inverse(const StylusProfile& pr, double p) {
    if (const auto* log = std::get_if<calib::LogSaturationModel>(&pr.transfer))
        return log->a1 * (1.0 - std::exp(-log->a2 * p));
    const auto& el = std::get<calib::EllipseModel>(pr.transfer);
    double disc = p * (2.0 * el.r1 - p);
    return el.r2 * std::sqrt(std::max(disc, 0.0));
}

}  // namespace

double StylusProfile::rescale_factor() const {
    return std::visit(
        [](const auto& m) {
            if constexpr (requires { m.f1; })
                return m.f1;
            else
                return m.f;
        },
        transfer);
}

double StylusProfile::physical_max() const { return physical_of(*this, raw_max); }

StylusProfile StylusProfile::ink() {
    StylusProfile p;
    p.name = "ink";
    p.transfer = calib::LogSaturationModel{1148.6344, 0.0468, 21.5761, 0.995};
    p.raw_max = 1024.0;
    p.nib_diameter_mm = 0.319;
    p.nominal_max_pressure = 45.0;
    return p;
}

StylusProfile StylusProfile::plastic() {
    StylusProfile p;
    p.name = "plastic";
    p.transfer = calib::EllipseModel{33.5234, 31.1303, 37.8450, 0.991};
    p.raw_max = 1024.0;
    p.nib_diameter_mm = 0.45;
    p.nominal_max_pressure = 25.0;
    return p;
}

double normalize(const StylusProfile& profile, double w) {
    if (!(w >= 0.0 && w <= profile.raw_max)) domain_fail("normalize", "raw level", w);
    return std::visit([w](const auto& m) { return m.rescaled(w); }, profile.transfer);
}

double denormalize(const StylusProfile& profile, double p) {
    double p_max = normalize(profile, profile.raw_max);
    if (!(p >= 0.0 && p <= p_max)) domain_fail("denormalize", "pressure", p);
    return physical_inverse(profile, p / profile.rescale_factor());
}

double to_physical(const StylusProfile& profile, double w) {
    if (!(w >= 0.0 && w <= profile.raw_max)) domain_fail("to_physical", "raw level", w);
    return physical_of(profile, w);
}

double map_pressure(const StylusProfile& src, const StylusProfile& dst, double w) {
    double p = to_physical(src, w);
    if (p >= dst.physical_max()) return dst.raw_max;
    return physical_inverse(dst, p);
}

dataio::Signature map_signature(const StylusProfile& src, const StylusProfile& dst,
                                const dataio::Signature& sig, MapStats* stats) {
    dataio::Signature out = sig;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        double w = out.samples[i].p;
        if (!(w >= 0.0 && w <= src.raw_max)) {
            std::string msg = "map_signature: pressure ";
            append_number(msg, w);
            msg += " out of range at sample " + std::to_string(i);
            throw std::domain_error(msg);
        }
        double mapped = map_pressure(src, dst, w);
        if (stats) {
            ++stats->n_samples;
            if (to_physical(src, w) >= dst.physical_max()) ++stats->n_clamped;
        }
        out.samples[i].p = mapped;
    }
    return out;
}

double pressure_weight(const StylusProfile& profile, WeightMode mode) {
    double full_scale = profile.physical_max();
    if (mode == WeightMode::published)
        full_scale = profile.nominal_max_pressure > 0.0 ? profile.nominal_max_pressure
                                                        : std::round(full_scale);
    return profile.raw_max / full_scale;
}

StylusProfile parse_profile(std::string_view text) {
    std::map<std::string, std::string, std::less<>> kv;
    std::size_t pos = 0, line_no = 0;
    bool saw_header = false;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line[0] == '#') {
            if (!saw_header && !line.empty()) {
                if (line.substr(0, 11) != "#PROFILE v1")
                    throw ParseError("expected '#PROFILE v1' header", line_no);
                saw_header = true;
            }
            continue;
        }
        std::size_t sp = line.find(' ');
        if (sp == std::string_view::npos)
            throw ParseError("expected 'key value'", line_no);
        std::string key(line.substr(0, sp));
        std::string_view value = line.substr(sp + 1);
        if (value.empty()) throw ParseError("missing value for '" + key + "'", line_no);
        if (!kv.emplace(key, std::string(value)).second)
            throw ParseError("duplicate key '" + key + "'", line_no);
    }
    if (!saw_header) throw ParseError("expected '#PROFILE v1' header", 1);

    auto take = [&kv](std::string_view key) {
        auto it = kv.find(key);
        if (it == kv.end())
            throw ParseError("missing required field '" + std::string(key) + "'", 0);
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto take_number = [&take](std::string_view key) {
        std::string v = take(key);
        double d = 0.0;
        auto res = std::from_chars(v.data(), v.data() + v.size(), d);
        if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
            throw ParseError("field '" + std::string(key) + "' is not a number: '" + v + "'", 0);
        return d;
    };

    StylusProfile pr;
    pr.name = take("name");
    std::string model = take("model");
    if (model == "log") {
        calib::LogSaturationModel m;
        m.a1 = take_number("a1");
        m.a2 = take_number("a2");
        m.f1 = take_number("f1");
        if (!(m.a1 > 0.0 && m.a2 > 0.0 && m.f1 > 0.0))
            throw ParseError("log model parameters must be positive", 0);
        pr.transfer = m;
    } else if (model == "ellipse") {
        calib::EllipseModel m;
        m.r1 = take_number("r1");
        m.r2 = take_number("r2");
        m.f = take_number("f");
        if (!(m.r1 > 0.0 && m.r2 > 0.0 && m.f > 0.0))
            throw ParseError("ellipse model parameters must be positive", 0);
        pr.transfer = m;
    } else {
        throw ParseError("model must be 'log' or 'ellipse', got '" + model + "'", 0);
    }
    pr.raw_max = take_number("raw_max");
    pr.nib_diameter_mm = take_number("nib_diameter_mm");
    if (kv.count("nominal_max_pressure")) pr.nominal_max_pressure = take_number("nominal_max_pressure");
    double r2 = kv.count("r_squared") ? take_number("r_squared") : 0.0;
    std::visit([r2](auto& m) { m.r_squared = r2; }, pr.transfer);
    if (!kv.empty()) throw ParseError("unknown field '" + kv.begin()->first + "'", 0);

    if (!(pr.raw_max > 0.0)) throw ParseError("raw_max must be positive", 0);
    if (!(pr.nib_diameter_mm > 0.0)) throw ParseError("nib_diameter_mm must be positive", 0);
    if (const auto* log = std::get_if<calib::LogSaturationModel>(&pr.transfer)) {
        if (!(log->a1 > pr.raw_max))
            throw ParseError("log model requires a1 > raw_max (saturation beyond full scale)", 0);
    } else {
        const auto& el = std::get<calib::EllipseModel>(pr.transfer);
        if (!(el.r1 * el.r2 >= pr.raw_max))
            throw ParseError("ellipse model requires r1*r2 >= raw_max", 0);
    }
    return pr;
}

std::string write_profile(const StylusProfile& profile) {
    if (profile.name.empty() || profile.name.find_first_of(" \n") != std::string::npos)
        throw std::invalid_argument("write_profile: bad profile name");
    std::string out = "#PROFILE v1\nname " + profile.name + "\n";
    double r2 = 0.0;
    if (const auto* log = std::get_if<calib::LogSaturationModel>(&profile.transfer)) {
        out += "model log\na1 ";
        append_number(out, log->a1);
        out += "\na2 ";
        append_number(out, log->a2);
        out += "\nf1 ";
        append_number(out, log->f1);
        out.push_back('\n');
        r2 = log->r_squared;
    } else {
        const auto& el = std::get<calib::EllipseModel>(profile.transfer);
        out += "model ellipse\nr1 ";
        append_number(out, el.r1);
        out += "\nr2 ";
        append_number(out, el.r2);
        out += "\nf ";
        append_number(out, el.f);
        out.push_back('\n');
        r2 = el.r_squared;
    }
    out += "raw_max ";
    append_number(out, profile.raw_max);
    out += "\nnib_diameter_mm ";
    append_number(out, profile.nib_diameter_mm);
    out.push_back('\n');
    if (profile.nominal_max_pressure > 0.0) {
        out += "nominal_max_pressure ";
        append_number(out, profile.nominal_max_pressure);
        out.push_back('\n');
    }
    if (r2 != 0.0) {
        out += "r_squared ";
        append_number(out, r2);
        out.push_back('\n');
    }
    return out;
}

StylusProfile read_profile_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_profile(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line());
    }
}

void write_profile_file(const std::filesystem::path& path, const StylusProfile& profile) {
    std::string text = write_profile(profile);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

StylusProfile resolve_profile(const std::string& name_or_path) {
    if (name_or_path == "ink") return StylusProfile::ink();
    if (name_or_path == "plastic") return StylusProfile::plastic();
    return read_profile_file(name_or_path);
}

}  // namespace penpress::stylus
