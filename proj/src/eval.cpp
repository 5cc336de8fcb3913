#include "penpress/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace penpress::eval {

std::string identify(std::span<const vq::MultiSectionModel> models,
                     const dataio::Signature& sig) {
    if (models.empty()) throw std::invalid_argument("identify: no models");
    const vq::MultiSectionModel* best = nullptr;
    double best_score = 0.0;
    for (const auto& model : models) {
        double s = vq::score(model, sig);
        if (!best || s < best_score || (s == best_score && model.user_id < best->user_id)) {
            best = &model;
            best_score = s;
        }
    }
    return best->user_id;
}

double identification_rate(std::span<const vq::MultiSectionModel> models,
                           std::span<const std::pair<std::string, dataio::Signature>> tests) {
    if (tests.empty()) throw std::invalid_argument("identification_rate: no test trials");
    std::size_t correct = 0;
    for (const auto& [true_user, sig] : tests)
        if (identify(models, sig) == true_user) ++correct;
    return static_cast<double>(correct) / static_cast<double>(tests.size());
}

DetCurve far_frr_sweep(const ScoreSet& scores) {
    if (scores.genuine.empty()) throw std::invalid_argument("far_frr_sweep: no genuine scores");
    if (scores.impostor.empty()) throw std::invalid_argument("far_frr_sweep: no impostor scores");
    for (double s : scores.genuine)
        if (!std::isfinite(s)) throw std::invalid_argument("far_frr_sweep: non-finite score");
    for (double s : scores.impostor)
        if (!std::isfinite(s)) throw std::invalid_argument("far_frr_sweep: non-finite score");

    std::vector<double> genuine = scores.genuine;
    std::vector<double> impostor = scores.impostor;
    std::sort(genuine.begin(), genuine.end());
    std::sort(impostor.begin(), impostor.end());

    std::vector<double> thresholds;
    thresholds.reserve(genuine.size() + impostor.size());
    thresholds.insert(thresholds.end(), genuine.begin(), genuine.end());
    thresholds.insert(thresholds.end(), impostor.begin(), impostor.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    const double n_gen = static_cast<double>(genuine.size());
    const double n_imp = static_cast<double>(impostor.size());
    auto accepted = [](const std::vector<double>& sorted, double threshold) -> std::size_t {
        return static_cast<std::size_t>(
            std::upper_bound(sorted.begin(), sorted.end(), threshold) - sorted.begin());
    };

    // Rates are integer counts over one division each; computing FRR as
    // 1 - accepted/n instead would drift a ulp from the counted value.
    DetCurve curve;
    curve.reserve(thresholds.size() + 2);
    curve.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0});
    for (double t : thresholds)
        curve.push_back({t, static_cast<double>(accepted(impostor, t)) / n_imp,
                         static_cast<double>(genuine.size() - accepted(genuine, t)) / n_gen});
    curve.push_back({-std::numeric_limits<double>::infinity(), 0.0, 1.0});
    return curve;
}

double dcf(double p_fr, double p_fa, const CostParams& cp) {
    return cp.c_fr * p_fr * cp.p_true + cp.c_fa * p_fa * (1.0 - cp.p_true);
}

std::pair<double, double> min_dcf(const DetCurve& curve, const CostParams& cp) {
    if (curve.empty()) throw std::invalid_argument("min_dcf: empty curve");
    double best = std::numeric_limits<double>::infinity();
    double best_threshold = 0.0;
    for (const DetPoint& pt : curve) {
        double v = dcf(pt.frr, pt.far, cp);
        if (v < best || (v == best && pt.threshold < best_threshold)) {
            best = v;
            best_threshold = pt.threshold;
        }
    }
    return {best, best_threshold};
}

double eer(const DetCurve& curve) {
    if (curve.empty()) throw std::invalid_argument("eer: empty curve");
    for (const DetPoint& pt : curve)
        if (pt.far == pt.frr && pt.far < 1.0) return pt.far;

    // No usable exact crossing: interpolate across the sign change of
    // FAR - FRR, skipping any all-error corner sitting inside the bracket.
    const DetPoint* above = nullptr;  // last point with FAR > FRR
    const DetPoint* below = nullptr;  // first point with FAR < FRR
    for (const DetPoint& pt : curve) {
        if (pt.far > pt.frr) above = &pt;
        if (pt.far < pt.frr && !below) below = &pt;
    }
    if (!above) return curve.front().far;  // FAR <= FRR everywhere
    if (!below) return curve.back().far;   // FAR >= FRR everywhere
    double da = above->far - above->frr;
    double db = below->far - below->frr;
    double t = da / (da - db);
    return above->far + t * (below->far - above->far);
}

double probit(double p) {
    // Wichura's algorithm AS 241 (PPND16); relative error below 1e-15.
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("probit: p must be in (0,1)");
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) *
                        r +
                    4.5921953931549871457e+4) *
                       r +
                   1.3731693765509461125e+4) *
                      r +
                  1.9715909503065514427e+3) *
                     r +
                 1.3314166789178437745e+2) *
                    r +
                3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) *
                        r +
                    2.1213794301586595867e+4) *
                       r +
                   5.3941960214247511077e+3) *
                      r +
                  6.8718700749205790830e+2) *
                     r +
                 4.2313330701600911252e+1) *
                    r +
                1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) *
                         r +
                     1.27045825245236838258e+0) *
                        r +
                    3.64784832476320460504e+0) *
                       r +
                   5.76949722146069140550e+0) *
                      r +
                  4.63033784615654529590e+0) *
                     r +
                 1.42343711074968357734e+0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) *
                         r +
                     1.48103976427480074590e-1) *
                        r +
                    6.89767334985100004550e-1) *
                       r +
                   1.67638483018380384940e+0) *
                      r +
                  2.05319162663775882187e+0) *
                     r +
                 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) *
                         r +
                     2.65321895265761230930e-2) *
                        r +
                    2.96560571828504891230e-1) *
                       r +
                   1.78482653991729133580e+0) *
                      r +
                  5.46378491116411436990e+0) *
                     r +
                 6.65790464350110377720e+0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) *
                         r +
                     7.86869131145613259100e-4) *
                        r +
                    1.48753612908506148525e-2) *
                       r +
                   1.36929880922735805310e-1) *
                      r +
                  5.99832206555887937690e-1) *
                     r +
                 1.0);
    }
    return q < 0.0 ? -value : value;
}

std::vector<std::pair<double, double>> det_points(const DetCurve& curve) {
    constexpr double kClip = 1e-6;
    std::vector<std::pair<double, double>> out;
    out.reserve(curve.size());
    for (const DetPoint& pt : curve) {
        double far = std::clamp(pt.far, kClip, 1.0 - kClip);
        double frr = std::clamp(pt.frr, kClip, 1.0 - kClip);
        out.emplace_back(probit(far), probit(frr));
    }
    return out;
}

}  // namespace penpress::eval
