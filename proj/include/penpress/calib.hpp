#pragma once

#include <array>
#include <span>
#include <utility>

#include "penpress/errors.hpp"

// Pressure-sensor characterization: the mass -> force -> pressure chain for
// balance measurements, and the invertible transfer curves that relate a
// stylus's physical tip pressure (N/mm^2) to the tablet's raw pressure level.
namespace penpress::calib {

inline constexpr double kGravityMps2 = 9.807;
inline constexpr double kDefaultRawMax = 1024.0;

double mass_to_force(double mass_g);
double nib_surface(double diameter_mm);
double force_to_pressure(double force_n, double surface_mm2);

// Reference-only polynomial raw_level = P(pressure), degree 6,
// coefficients[0] multiplying pressure^6.
struct Poly6Model {
    std::array<double, 7> coefficients{};
    double r_squared = 0.0;
};

// Soft-saturation curve (ink cartridge):
//   physical(w) = -ln(1 - w/a1) / a2
//   rescaled(w) = f1 * physical(w)
// f1 stretches the output to the tablet's 0..raw_max scale.
struct LogSaturationModel {
    double a1 = 0.0;
    double a2 = 0.0;
    double f1 = 0.0;
    double r_squared = 0.0;

    double physical(double raw_level) const;
    double rescaled(double raw_level) const;
};

// Hard-saturation elliptical arc (plastic refill):
//   physical(w) = r1 - sqrt(r1^2 - (w/r2)^2)
//   rescaled(w) = f * physical(w)
// r1 is in pressure units, r2 in raw levels; the curve is defined for
// w <= r1*r2, where the tangent turns vertical.
struct EllipseModel {
    double r1 = 0.0;
    double r2 = 0.0;
    double f = 0.0;
    double r_squared = 0.0;

    double physical(double raw_level) const;
    double rescaled(double raw_level) const;
};

using CurvePoint = std::pair<double, double>;

double eval_poly6(const Poly6Model& model, double pressure);

// Linear least squares on (pressure, raw_level) points. Needs at least 8
// points; a rank-deficient design (e.g. all points at one pressure) is a
// FitError.
Poly6Model fit_poly6(std::span<const CurvePoint> points);

// Damped Gauss-Newton on (raw_level, pressure) points, pressure in physical
// units as produced by the balance chain. The two shape parameters are
// fitted; the rescale factor is then pinned so rescaled(raw_max) == raw_max.
// Fitting the rescale factor jointly is ill-posed: scaling (a2, f1) or
// (r1, 1/r2, f) together leaves the rescaled curve unchanged, so the split
// between shape and scale is only observable in physical-unit data.
LogSaturationModel fit_log(std::span<const CurvePoint> points,
                           double raw_max = kDefaultRawMax);
EllipseModel fit_ellipse(std::span<const CurvePoint> points,
                         double raw_max = kDefaultRawMax);

// 1 - SS_res/SS_tot. Throws if lengths differ, inputs are empty, or the
// observed values are all equal (undefined denominator).
double r_squared(std::span<const double> predicted, std::span<const double> observed);

}  // namespace penpress::calib
