#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "penpress/errors.hpp"

// Signature sample streams: the on-disk text format, section slicing for the
// multi-section recognizer, and a deterministic synthetic corpus generator.
namespace penpress::dataio {

// One 100 Hz pen sample. Channel ranges follow the acquisition protocol;
// values are kept as reals so transformed pressure flows through unrounded.
struct PenSample {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double p = 0.0;
    double azimuth = 0.0;
    double altitude = 0.0;

    bool operator==(const PenSample&) const = default;
};

struct ChannelSpec {
    const char* name;
    double lo, hi;
};

inline constexpr std::array<ChannelSpec, 5> kChannels{{
    {"x", 0.0, 12700.0},
    {"y", 0.0, 9700.0},
    {"p", 0.0, 1024.0},
    {"azimuth", 0.0, 3600.0},
    {"altitude", 300.0, 900.0},
}};

enum class SignatureKind { genuine, forgery };

struct Signature {
    std::string user_id;
    std::string session_id;
    SignatureKind kind = SignatureKind::genuine;
    double rate_hz = 100.0;
    std::vector<PenSample> samples;

    bool operator==(const Signature&) const = default;
};

// Text format:
//   #SIG v1 user=<id> session=<id> kind=<genuine|forgery> rate=<hz>
//   <t> <x> <y> <p> <azimuth> <altitude>
//   ...
// Single-space separated, LF line endings. parse rejects out-of-range
// channels and non-increasing timestamps, naming the line. write rounds
// pressure to the nearest integer level; other channels round-trip exactly.
Signature parse_signature(std::string_view text);
std::string write_signature(const Signature& sig);

Signature read_signature_file(const std::filesystem::path& path);
void write_signature_file(const std::filesystem::path& path, const Signature& sig);

// Contiguous time slices: section k (1-based) covers sample indices
// [floor((k-1)*n/s), floor(k*n/s)). Sizes differ by at most one and sum to n.
std::vector<std::span<const PenSample>> split_sections(std::span<const PenSample> samples,
                                                       int sections);
std::vector<std::span<const PenSample>> split_sections(const Signature& sig, int sections);

struct SyntheticConfig {
    int n_users = 50;
    int n_train = 5;
    int n_test = 5;
    int n_samples_mean = 300;
    std::uint64_t seed = 7;
    double intra_user_jitter = 0.03;  // relative to each channel's range
};

struct UserData {
    std::vector<Signature> train;
    std::vector<Signature> test;
    std::vector<Signature> forgeries;  // skilled imitations targeting this user

    bool operator==(const UserData&) const = default;
};

using Database = std::map<std::string, UserData>;

// Reads every *.sig file in dir (non-recursive) and groups by the user id in
// the header. Role comes from the file, not its name: kind=forgery goes to
// forgeries, genuine signatures whose session id starts with "train" go to
// train, the rest to test. Lists are sorted by session id.
Database load_database(const std::filesystem::path& dir);

// Writes db as <user>_<session>.sig files into dir (created if needed).
void write_database(const std::filesystem::path& dir, const Database& db);

// Deterministic: a config maps to exactly one corpus, and each user's stream
// is derived from (seed, user_id) alone, so subsets agree across configs.
// Users are separable by construction (stratified pressure envelopes plus
// per-user trajectory shape); intra-user variation is jitter plus small time
// warps, all scaled by intra_user_jitter (0 yields identical signatures).
Database synth_database(const SyntheticConfig& cfg);

std::string synth_user_id(int index);  // 0 -> "u001"

}  // namespace penpress::dataio
