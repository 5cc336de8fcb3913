#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "penpress/calib.hpp"
#include "penpress/dataio.hpp"

namespace penpress::stylus {

// A pen's pressure behavior: nib geometry plus the fitted transfer model that
// links raw digitizer levels to physical pressure. Immutable after
// construction; all operations on it are pure.
struct StylusProfile {
    std::string name;
    std::variant<calib::LogSaturationModel, calib::EllipseModel> transfer;
    double raw_max = calib::kDefaultRawMax;
    double nib_diameter_mm = 0.0;
    // Vendor-quoted full-scale pressure in N/mm² (e.g. 45 or 25). Zero when
    // unknown; pressure_weight then falls back to the fitted physical_max.
    double nominal_max_pressure = 0.0;

    // Physical pressure (N/mm²) the sensor reports at digital full scale.
    double physical_max() const;
    // The model's rescale factor (f1 or f): rescaled = factor * physical.
    double rescale_factor() const;

    static StylusProfile ink();
    static StylusProfile plastic();
};

// Raw level [0, raw_max] -> rescaled pressure [0, ~raw_max] via the fitted
// curve. Strictly increasing; no clamping — out-of-range input is an error.
double normalize(const StylusProfile& profile, double w);

// Exact analytic inverse of normalize. p must lie in [0, normalize(raw_max)].
double denormalize(const StylusProfile& profile, double p);

// Raw level -> physical pressure in N/mm² (normalize without the rescale
// factor). This is the stylus-independent space used for cross-pen mapping.
double to_physical(const StylusProfile& profile, double w);

// Raw level in src space -> raw level in dst space at equal physical
// pressure. Source pressures at or beyond dst's full scale saturate to
// dst.raw_max, mirroring what the destination sensor would report.
double map_pressure(const StylusProfile& src, const StylusProfile& dst, double w);

struct MapStats {
    std::size_t n_samples = 0;
    std::size_t n_clamped = 0;
};

// Samplewise map_pressure on the pressure channel; timestamps and the other
// four channels pass through bit-exactly. Out-of-range pressure raises an
// error naming the sample index. When stats is non-null it accumulates
// sample/clamp counts (not reset, so one struct can tally a whole database).
dataio::Signature map_signature(const StylusProfile& src, const StylusProfile& dst,
                                const dataio::Signature& sig, MapStats* stats = nullptr);

enum class WeightMode { published, exact };

// Pressure channel weight for the recognizer's weighted distance: raw_max
// divided by the pen's full-scale pressure, so physical-unit pressure regains
// the influence of a 0..raw_max channel. "published" uses the vendor nominal
// full scale (rounded fitted maximum when no nominal is recorded); "exact"
// uses the fitted physical maximum.
double pressure_weight(const StylusProfile& profile, WeightMode mode = WeightMode::published);

// Key-value text serialization (fields: name, model, parameters, raw_max,
// nib_diameter_mm, optional nominal_max_pressure / r_squared).
StylusProfile parse_profile(std::string_view text);
std::string write_profile(const StylusProfile& profile);
StylusProfile read_profile_file(const std::filesystem::path& path);
void write_profile_file(const std::filesystem::path& path, const StylusProfile& profile);

// "ink" / "plastic" return the built-ins; anything else is read as a file path.
StylusProfile resolve_profile(const std::string& name_or_path);

}  // namespace penpress::stylus
