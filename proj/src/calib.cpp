#include "penpress/calib.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace penpress::calib {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::domain_error(std::string(what) + " is not finite");
}

}  // namespace

double mass_to_force(double mass_g) {
    require_finite(mass_g, "mass");
    if (mass_g < 0.0) throw std::domain_error("mass must be non-negative");
    return mass_g / 1000.0 * kGravityMps2;
}

double nib_surface(double diameter_mm) {
    require_finite(diameter_mm, "nib diameter");
    if (diameter_mm <= 0.0) throw std::domain_error("nib diameter must be positive");
    return std::numbers::pi * diameter_mm * diameter_mm / 4.0;
}

double force_to_pressure(double force_n, double surface_mm2) {
    require_finite(force_n, "force");
    require_finite(surface_mm2, "surface");
    if (force_n < 0.0) throw std::domain_error("force must be non-negative");
    if (surface_mm2 <= 0.0) throw std::domain_error("surface must be positive");
    return force_n / surface_mm2;
}

double LogSaturationModel::physical(double raw_level) const {
    return -std::log(1.0 - raw_level / a1) / a2;
}

double LogSaturationModel::rescaled(double raw_level) const {
    return f1 * physical(raw_level);
}

double EllipseModel::physical(double raw_level) const {
    double q = raw_level / r2;
    return r1 - std::sqrt(r1 * r1 - q * q);
}

double EllipseModel::rescaled(double raw_level) const {
    return f * physical(raw_level);
}

double eval_poly6(const Poly6Model& model, double pressure) {
    double acc = 0.0;
    for (double c : model.coefficients) acc = acc * pressure + c;
    return acc;
}

double r_squared(std::span<const double> predicted, std::span<const double> observed) {
    if (predicted.size() != observed.size())
        throw std::invalid_argument("predicted/observed length mismatch");
    if (observed.empty()) throw std::invalid_argument("r_squared of empty series");
    double mean = 0.0;
    for (double y : observed) mean += y;
    mean /= static_cast<double>(observed.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
        ss_tot += (observed[i] - mean) * (observed[i] - mean);
    }
    if (ss_tot == 0.0)
        throw std::invalid_argument("r_squared undefined: observed values are all equal");
    return 1.0 - ss_res / ss_tot;
}

Poly6Model fit_poly6(std::span<const CurvePoint> points) {
    constexpr int kTerms = 7;
    const auto n = static_cast<Eigen::Index>(points.size());
    if (n < 8) throw FitError("fit_poly6 needs at least 8 points");

    // Fit in x/s to keep the Vandermonde columns near unit scale, then map
    // the coefficients back. Exact in exact arithmetic.
    double scale = 0.0;
    for (const auto& [x, y] : points) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) throw FitError("fit_poly6: all pressures are zero");

    Eigen::MatrixXd v(n, kTerms);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double u = points[static_cast<std::size_t>(i)].first / scale;
        double acc = 1.0;
        for (int k = kTerms - 1; k >= 0; --k) {
            v(i, k) = acc;
            acc *= u;
        }
        y(i) = points[static_cast<std::size_t>(i)].second;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
    if (qr.rank() < kTerms)
        throw FitError("fit_poly6: design matrix is rank-deficient (too few distinct pressures)");
    Eigen::VectorXd b = qr.solve(y);

    Poly6Model model;
    double pow_s = 1.0;
    for (int k = kTerms - 1; k >= 0; --k) {
        model.coefficients[static_cast<std::size_t>(k)] = b(k) / pow_s;
        pow_s *= scale;
    }

    std::vector<double> pred(points.size()), obs(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        pred[i] = eval_poly6(model, points[i].first);
        obs[i] = points[i].second;
    }
    model.r_squared = r_squared(pred, obs);
    return model;
}

namespace {

// Damped Gauss-Newton over two parameters. `eval` fills residuals and the
// n x 2 Jacobian; `valid` keeps iterates inside the model domain. Steps are
// halved until the residual norm drops; a step that cannot improve means a
// (local) optimum, which counts as convergence.
struct Gn2Result {
    Eigen::Vector2d theta;
    double residual_norm;
};

Gn2Result gauss_newton2(
    const std::function<double(const Eigen::Vector2d&, Eigen::VectorXd&, Eigen::MatrixXd&)>& eval,
    Eigen::Vector2d theta,
    const std::function<bool(const Eigen::Vector2d&)>& valid,
    int max_iterations = 200, double rel_tol = 1e-10) {
    if (!valid(theta)) throw FitError("fit: initial iterate outside the model domain");

    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    double rn = eval(theta, r, jac);

    for (int it = 0; it < max_iterations; ++it) {
        Eigen::Vector2d delta = jac.householderQr().solve(-r);
        if (!delta.allFinite()) throw FitError("fit: singular Jacobian", rn, it);

        double alpha = 1.0;
        bool improved = false;
        Eigen::Vector2d cand;
        Eigen::VectorXd rc;
        Eigen::MatrixXd jc;
        double rcn = rn;
        for (int halving = 0; halving < 60; ++halving) {
            cand = theta + alpha * delta;
            if (valid(cand)) {
                rcn = eval(cand, rc, jc);
                if (std::isfinite(rcn) && rcn < rn) {
                    improved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!improved) return {theta, rn};

        double rel = rn > 0.0 ? (rn - rcn) / rn : 0.0;
        theta = cand;
        r.swap(rc);
        jac.swap(jc);
        rn = rcn;
        if (rel < rel_tol) return {theta, rn};
    }
    throw FitError("fit: no convergence within iteration cap", rn, 200);
}

struct PreparedPoints {
    Eigen::VectorXd w, p;
    double w_max, p_max;
};

PreparedPoints prepare(std::span<const CurvePoint> points, const char* name) {
    if (points.size() < 4)
        throw FitError(std::string(name) + " needs at least 4 points");
    PreparedPoints out;
    out.w.resize(static_cast<Eigen::Index>(points.size()));
    out.p.resize(static_cast<Eigen::Index>(points.size()));
    out.w_max = 0.0;
    out.p_max = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto [w, p] = points[i];
        if (!std::isfinite(w) || !std::isfinite(p))
            throw FitError(std::string(name) + ": non-finite input point");
        if (w < 0.0) throw FitError(std::string(name) + ": negative raw level");
        out.w(static_cast<Eigen::Index>(i)) = w;
        out.p(static_cast<Eigen::Index>(i)) = p;
        out.w_max = std::max(out.w_max, w);
        out.p_max = std::max(out.p_max, p);
    }
    if (out.w_max <= 0.0 || out.p_max <= 0.0)
        throw FitError(std::string(name) + ": degenerate data (no positive levels)");
    return out;
}

double stored_r_squared(const Eigen::VectorXd& predicted, const Eigen::VectorXd& observed) {
    std::vector<double> pred(predicted.data(), predicted.data() + predicted.size());
    std::vector<double> obs(observed.data(), observed.data() + observed.size());
    return r_squared(pred, obs);
}

}  // namespace

LogSaturationModel fit_log(std::span<const CurvePoint> points, double raw_max) {
    PreparedPoints d = prepare(points, "fit_log");

    auto eval = [&d](const Eigen::Vector2d& th, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
        double a1 = th(0), a2 = th(1);
        const auto n = d.w.size();
        r.resize(n);
        jac.resize(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            double w = d.w(i);
            double u = -std::log(1.0 - w / a1) / a2;
            r(i) = u - d.p(i);
            jac(i, 0) = -w / (a2 * a1 * (a1 - w));
            jac(i, 1) = -u / a2;
        }
        return r.norm();
    };
    double w_max = d.w_max;
    auto valid = [w_max](const Eigen::Vector2d& th) {
        return th(0) > w_max * (1.0 + 1e-12) && th(1) > 0.0;
    };

    Eigen::Vector2d init(1.1 * d.w_max, 0.05);
    Gn2Result res = gauss_newton2(eval, init, valid);

    LogSaturationModel model;
    model.a1 = res.theta(0);
    model.a2 = res.theta(1);
    if (model.a1 <= raw_max)
        throw FitError("fit_log: fitted curve does not cover the raw range (a1 <= raw_max)",
                       res.residual_norm);
    model.f1 = raw_max / model.physical(raw_max);

    Eigen::VectorXd pred(d.w.size());
    for (Eigen::Index i = 0; i < d.w.size(); ++i) pred(i) = model.physical(d.w(i));
    model.r_squared = stored_r_squared(pred, d.p);
    return model;
}

EllipseModel fit_ellipse(std::span<const CurvePoint> points, double raw_max) {
    PreparedPoints d = prepare(points, "fit_ellipse");

    auto eval = [&d](const Eigen::Vector2d& th, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
        double r1 = th(0), r2 = th(1);
        const auto n = d.w.size();
        r.resize(n);
        jac.resize(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            double q = d.w(i) / r2;
            double s = std::sqrt(r1 * r1 - q * q);
            r(i) = (r1 - s) - d.p(i);
            jac(i, 0) = 1.0 - r1 / s;
            jac(i, 1) = -q * q / (s * r2);
        }
        return r.norm();
    };
    double w_max = d.w_max;
    auto valid = [w_max](const Eigen::Vector2d& th) {
        // All data must stay strictly inside the arc: w < r1*r2.
        return th(0) > 0.0 && th(1) > 0.0 && th(0) * th(1) > w_max * (1.0 + 1e-12);
    };

    double r1_0 = 1.3 * d.p_max;
    double disc = 2.0 * r1_0 * d.p_max - d.p_max * d.p_max;  // = p_max*(2*r1_0 - p_max) > 0
    Eigen::Vector2d init(r1_0, d.w_max / std::sqrt(disc));
    Gn2Result res = gauss_newton2(eval, init, valid);

    EllipseModel model;
    model.r1 = res.theta(0);
    model.r2 = res.theta(1);
    if (model.r1 * model.r2 < raw_max)
        throw FitError("fit_ellipse: fitted arc does not cover the raw range (r1*r2 < raw_max)",
                       res.residual_norm);
    model.f = raw_max / model.physical(raw_max);

    Eigen::VectorXd pred(d.w.size());
    for (Eigen::Index i = 0; i < d.w.size(); ++i) pred(i) = model.physical(d.w(i));
    model.r_squared = stored_r_squared(pred, d.p);
    return model;
}

}  // namespace penpress::calib
