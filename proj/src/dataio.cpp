#include "penpress/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "penpress/rng.hpp"

namespace penpress::dataio {

namespace {

// Shortest representation that parses back to the same double ("816", "815.6").
void append_number(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

double parse_double(std::string_view token, std::size_t line, const char* what) {
    double v = 0.0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
        throw ParseError(std::string("malformed ") + what + " '" + std::string(token) + "'", line);
    return v;
}

void check_range(double v, const ChannelSpec& ch, std::size_t line) {
    if (v < ch.lo || v > ch.hi) {
        std::string msg = "channel " + std::string(ch.name) + " out of range: ";
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        msg.append(buf, res.ptr);
        msg += " (allowed [";
        res = std::to_chars(buf, buf + sizeof(buf), ch.lo);
        msg.append(buf, res.ptr);
        msg += ", ";
        res = std::to_chars(buf, buf + sizeof(buf), ch.hi);
        msg.append(buf, res.ptr);
        msg += "])";
        throw ParseError(msg, line);
    }
}

std::string_view header_value(std::span<const std::string_view> tokens, std::string_view key,
                              std::size_t line) {
    for (auto tok : tokens) {
        if (tok.size() > key.size() && tok.substr(0, key.size()) == key &&
            tok[key.size()] == '=')
            return tok.substr(key.size() + 1);
    }
    throw ParseError("header is missing '" + std::string(key) + "='", line);
}

}  // namespace

Signature parse_signature(std::string_view text) {
    Signature sig;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool saw_header = false;
    double prev_t = 0.0;

    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        auto fields = split_ws(line);
        if (fields.empty()) continue;

        if (!saw_header) {
            if (fields[0] != "#SIG" || fields.size() < 2 || fields[1] != "v1")
                throw ParseError("expected '#SIG v1' header", line_no);
            sig.user_id = std::string(header_value(fields, "user", line_no));
            sig.session_id = std::string(header_value(fields, "session", line_no));
            auto kind = header_value(fields, "kind", line_no);
            if (kind == "genuine")
                sig.kind = SignatureKind::genuine;
            else if (kind == "forgery")
                sig.kind = SignatureKind::forgery;
            else
                throw ParseError("kind must be 'genuine' or 'forgery', got '" +
                                     std::string(kind) + "'",
                                 line_no);
            sig.rate_hz = parse_double(header_value(fields, "rate", line_no), line_no, "rate");
            if (!(sig.rate_hz > 0.0)) throw ParseError("rate must be positive", line_no);
            saw_header = true;
            continue;
        }

        if (fields.size() != 6)
            throw ParseError("expected 6 values per sample, got " +
                                 std::to_string(fields.size()),
                             line_no);
        PenSample s;
        s.t = parse_double(fields[0], line_no, "t");
        s.x = parse_double(fields[1], line_no, "x");
        s.y = parse_double(fields[2], line_no, "y");
        s.p = parse_double(fields[3], line_no, "p");
        s.azimuth = parse_double(fields[4], line_no, "azimuth");
        s.altitude = parse_double(fields[5], line_no, "altitude");
        check_range(s.x, kChannels[0], line_no);
        check_range(s.y, kChannels[1], line_no);
        check_range(s.p, kChannels[2], line_no);
        check_range(s.azimuth, kChannels[3], line_no);
        check_range(s.altitude, kChannels[4], line_no);
        if (!sig.samples.empty() && !(s.t > prev_t))
            throw ParseError("timestamps must be strictly increasing", line_no);
        prev_t = s.t;
        sig.samples.push_back(s);
    }

    if (!saw_header) throw ParseError("expected '#SIG v1' header", 1);
    if (sig.samples.empty()) throw ParseError("no samples", line_no);
    return sig;
}

std::string write_signature(const Signature& sig) {
    if (sig.samples.empty()) throw std::invalid_argument("write_signature: no samples");
    if (sig.user_id.empty() || sig.user_id.find(' ') != std::string::npos)
        throw std::invalid_argument("write_signature: bad user id");
    if (sig.session_id.empty() || sig.session_id.find(' ') != std::string::npos)
        throw std::invalid_argument("write_signature: bad session id");

    std::string out = "#SIG v1 user=" + sig.user_id + " session=" + sig.session_id +
                      " kind=" +
                      (sig.kind == SignatureKind::genuine ? "genuine" : "forgery") + " rate=";
    append_number(out, sig.rate_hz);
    out.push_back('\n');

    double prev_t = 0.0;
    for (std::size_t i = 0; i < sig.samples.size(); ++i) {
        const PenSample& s = sig.samples[i];
        if (i > 0 && !(s.t > prev_t))
            throw std::invalid_argument("write_signature: timestamps must be strictly increasing");
        prev_t = s.t;

        // Pressure is an integer level on disk; everything else is exact.
        double p = std::round(s.p);
        p = std::clamp(p, kChannels[2].lo, kChannels[2].hi);
        const std::pair<double, const ChannelSpec*> checked[] = {
            {s.x, &kChannels[0]}, {s.y, &kChannels[1]}, {p, &kChannels[2]},
            {s.azimuth, &kChannels[3]}, {s.altitude, &kChannels[4]}};
        for (auto [v, ch] : checked) {
            if (v < ch->lo || v > ch->hi)
                throw std::invalid_argument(std::string("write_signature: channel ") + ch->name +
                                            " out of range at sample " + std::to_string(i));
        }

        append_number(out, s.t);
        out.push_back(' ');
        append_number(out, s.x);
        out.push_back(' ');
        append_number(out, s.y);
        out.push_back(' ');
        append_number(out, p);
        out.push_back(' ');
        append_number(out, s.azimuth);
        out.push_back(' ');
        append_number(out, s.altitude);
        out.push_back('\n');
    }
    return out;
}

Signature read_signature_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_signature(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line());
    }
}

void write_signature_file(const std::filesystem::path& path, const Signature& sig) {
    std::string text = write_signature(sig);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::span<const PenSample>> split_sections(std::span<const PenSample> samples,
                                                       int sections) {
    if (sections < 1) throw std::invalid_argument("split_sections: sections must be >= 1");
    const auto n = samples.size();
    if (n < static_cast<std::size_t>(sections))
        throw std::invalid_argument("split_sections: " + std::to_string(n) +
                                    " samples cannot fill " + std::to_string(sections) +
                                    " sections");
    std::vector<std::span<const PenSample>> out;
    out.reserve(static_cast<std::size_t>(sections));
    for (int k = 1; k <= sections; ++k) {
        std::size_t lo = n * static_cast<std::size_t>(k - 1) / static_cast<std::size_t>(sections);
        std::size_t hi = n * static_cast<std::size_t>(k) / static_cast<std::size_t>(sections);
        out.push_back(samples.subspan(lo, hi - lo));
    }
    return out;
}

std::vector<std::span<const PenSample>> split_sections(const Signature& sig, int sections) {
    return split_sections(std::span<const PenSample>(sig.samples), sections);
}

Database load_database(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".sig")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no .sig files in " + dir.string());

    Database db;
    for (const auto& path : files) {
        Signature sig = read_signature_file(path);
        UserData& user = db[sig.user_id];
        if (sig.kind == SignatureKind::forgery)
            user.forgeries.push_back(std::move(sig));
        else if (sig.session_id.rfind("train", 0) == 0)
            user.train.push_back(std::move(sig));
        else
            user.test.push_back(std::move(sig));
    }
    auto by_session = [](const Signature& a, const Signature& b) {
        return a.session_id < b.session_id;
    };
    for (auto& [id, user] : db) {
        std::sort(user.train.begin(), user.train.end(), by_session);
        std::sort(user.test.begin(), user.test.end(), by_session);
        std::sort(user.forgeries.begin(), user.forgeries.end(), by_session);
    }
    return db;
}

void write_database(const std::filesystem::path& dir, const Database& db) {
    std::filesystem::create_directories(dir);
    for (const auto& [id, user] : db) {
        auto write_all = [&](const std::vector<Signature>& sigs) {
            for (const Signature& sig : sigs)
                write_signature_file(dir / (id + "_" + sig.session_id + ".sig"), sig);
        };
        write_all(user.train);
        write_all(user.test);
        write_all(user.forgeries);
    }
}

std::string synth_user_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "u%03d", index + 1);
    return buf;
}

namespace {

// Fraction with bit-reversed base-2 digits; stratifies per-user anchors so
// adjacent user indices land far apart in [0, 1).
double van_der_corput(std::uint32_t i) {
    double result = 0.0, f = 0.5;
    while (i > 0) {
        result += f * static_cast<double>(i & 1u);
        i >>= 1;
        f *= 0.5;
    }
    return result;
}

// Centripetal-free uniform Catmull-Rom through K control values at
// parameters k/(K-1), with clamped end tangents.
double catmull_rom(const std::vector<double>& c, double m) {
    const int K = static_cast<int>(c.size());
    if (K == 1) return c[0];
    double pos = std::clamp(m, 0.0, 1.0) * static_cast<double>(K - 1);
    int seg = std::min(static_cast<int>(pos), K - 2);
    double u = pos - static_cast<double>(seg);
    double p0 = c[static_cast<std::size_t>(std::max(seg - 1, 0))];
    double p1 = c[static_cast<std::size_t>(seg)];
    double p2 = c[static_cast<std::size_t>(seg + 1)];
    double p3 = c[static_cast<std::size_t>(std::min(seg + 2, K - 1))];
    double u2 = u * u, u3 = u2 * u;
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3);
}

struct UserSketch {
    std::vector<double> cx, cy, cp, caz, calt;
};

UserSketch sketch_user(int index, std::uint64_t seed) {
    Rng rng(mix_seed(seed, synth_user_id(index)));
    UserSketch u;
    const int K = 8 + static_cast<int>(rng.below(9));  // 8..16 control points

    // Low-discrepancy pressure base: the envelope level is the strongest
    // identity cue, so spread users across the dynamic range up front. The
    // ceiling stays clear of the region one pen resolves but the other
    // saturates (ink levels above ~825 pin at plastic full scale), so
    // cross-pen mapping stays invertible for almost every sample.
    double base_p = 240.0 + 430.0 * van_der_corput(static_cast<std::uint32_t>(index) + 1);
    double ux = rng.uniform(-800.0, 800.0);
    double uy = rng.uniform(-700.0, 700.0);
    double uaz = rng.uniform(-200.0, 200.0);
    double ualt = rng.uniform(-80.0, 80.0);

    for (int k = 0; k < K; ++k) {
        double zig = (k % 2 == 0) ? -1.0 : 1.0;
        u.cx.push_back(std::clamp(6350.0 + zig * 2200.0 + ux + rng.uniform(-650.0, 650.0),
                                  kChannels[0].lo, kChannels[0].hi));
        u.cy.push_back(std::clamp(4850.0 + uy + rng.uniform(-900.0, 900.0), kChannels[1].lo,
                                  kChannels[1].hi));
        bool endpoint = (k == 0 || k == K - 1);
        u.cp.push_back(endpoint ? 0.0
                                : std::clamp(base_p + rng.uniform(-140.0, 140.0), 60.0, 790.0));
        u.caz.push_back(std::clamp(1800.0 + uaz + rng.uniform(-110.0, 110.0), kChannels[3].lo,
                                   kChannels[3].hi));
        u.calt.push_back(std::clamp(600.0 + ualt + rng.uniform(-45.0, 45.0), kChannels[4].lo,
                                    kChannels[4].hi));
    }
    return u;
}

Signature realize_signature(const UserSketch& u, const SyntheticConfig& cfg,
                            const std::string& user_id, const std::string& session_id, Rng& rng) {
    const double j = cfg.intra_user_jitter;
    int n = static_cast<int>(
        std::lround(static_cast<double>(cfg.n_samples_mean) * (1.0 + j * rng.uniform(-3.0, 3.0))));
    n = std::max(n, 8);
    double gamma = 1.0 + j * rng.uniform(-1.5, 1.5);

    const std::vector<double>* controls[5] = {&u.cx, &u.cy, &u.cp, &u.caz, &u.calt};
    double offset[5], sigma[5];
    for (int c = 0; c < 5; ++c) {
        double range = kChannels[static_cast<std::size_t>(c)].hi -
                       kChannels[static_cast<std::size_t>(c)].lo;
        offset[c] = j * range * 0.35 * rng.gaussian();
        sigma[c] = j * range * 0.5;
    }

    Signature sig;
    sig.user_id = user_id;
    sig.session_id = session_id;
    sig.kind = SignatureKind::genuine;
    sig.rate_hz = 100.0;
    sig.samples.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        double m = std::pow(static_cast<double>(t) / static_cast<double>(n - 1), gamma);
        double v[5];
        for (int c = 0; c < 5; ++c) {
            const ChannelSpec& ch = kChannels[static_cast<std::size_t>(c)];
            double val = catmull_rom(*controls[c], m) + offset[c] + sigma[c] * rng.gaussian();
            v[c] = std::clamp(val, ch.lo, ch.hi);
        }
        sig.samples.push_back(
            {static_cast<double>(t), v[0], v[1], v[2], v[3], v[4]});
    }
    return sig;
}

}  // namespace

Database synth_database(const SyntheticConfig& cfg) {
    if (cfg.n_users < 1 || cfg.n_train < 1 || cfg.n_test < 1)
        throw std::invalid_argument("synth_database: counts must be positive");
    if (cfg.n_samples_mean < 16)
        throw std::invalid_argument("synth_database: n_samples_mean too small");
    if (cfg.intra_user_jitter < 0.0 || cfg.intra_user_jitter > 0.2)
        throw std::invalid_argument("synth_database: intra_user_jitter outside [0, 0.2]");

    Database db;
    for (int i = 0; i < cfg.n_users; ++i) {
        std::string id = synth_user_id(i);
        UserSketch sketch = sketch_user(i, cfg.seed);
        // The per-user stream: sketch consumed a fixed prefix, signatures
        // consume the rest in a fixed order.
        Rng rng(mix_seed(cfg.seed, id + "/sessions"));
        UserData data;
        for (int s = 0; s < cfg.n_train; ++s)
            data.train.push_back(
                realize_signature(sketch, cfg, id, "train-" + std::to_string(s + 1), rng));
        for (int s = 0; s < cfg.n_test; ++s)
            data.test.push_back(
                realize_signature(sketch, cfg, id, "test-" + std::to_string(s + 1), rng));
        db.emplace(std::move(id), std::move(data));
    }
    return db;
}

}  // namespace penpress::dataio
