#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "penpress/dataio.hpp"
#include "penpress/vq.hpp"

// Identification and verification metrics over recognizer scores. Scores are
// dissimilarities (lower = more similar); a trial is accepted when its score
// is at or below the decision threshold.
namespace penpress::eval {

struct ScoreSet {
    std::vector<double> genuine;   // target trials: own test vs own model
    std::vector<double> impostor;  // non-target trials
};

struct DetPoint {
    double threshold = 0.0;
    double far = 0.0;  // impostor trials accepted
    double frr = 0.0;  // genuine trials rejected
};

// Ordered by descending threshold, so FAR is non-increasing and FRR
// non-decreasing along the curve. First point is the accept-all sentinel
// (+inf, 1, 0); last is the reject-all sentinel (-inf, 0, 1).
using DetCurve = std::vector<DetPoint>;

struct CostParams {
    double c_fr = 1.0;   // cost of rejecting a genuine trial
    double c_fa = 1.0;   // cost of accepting an impostor trial
    double p_true = 0.5; // prior of a genuine trial
};

// Closest model by vq::score; ties go to the lexicographically lowest user id.
std::string identify(std::span<const vq::MultiSectionModel> models,
                     const dataio::Signature& sig);

// Fraction of (true_user, signature) trials where identify picks true_user.
double identification_rate(std::span<const vq::MultiSectionModel> models,
                           std::span<const std::pair<std::string, dataio::Signature>> tests);

// One point per distinct score plus the two sentinels.
DetCurve far_frr_sweep(const ScoreSet& scores);

// c_fr * p_fr * p_true + c_fa * p_fa * (1 - p_true)
double dcf(double p_fr, double p_fa, const CostParams& cp);

// Minimum detection cost over the curve and the threshold attaining it
// (lowest such threshold on ties).
std::pair<double, double> min_dcf(const DetCurve& curve, const CostParams& cp);

// Equal error rate: the curve point with FAR == FRR when one exists (the
// all-error corner FAR = FRR = 1, which a threshold sitting between inverted
// score sets produces, does not count); otherwise linear interpolation
// between the last point with FAR > FRR and the first with FAR < FRR.
double eer(const DetCurve& curve);

// Standard normal inverse CDF (Wichura's PPND16), |error| < 1e-15 on (0,1).
double probit(double p);

// (probit(FAR), probit(FRR)) per curve point, rates first clipped to
// [1e-6, 1-1e-6] so zero-error points stay finite.
std::vector<std::pair<double, double>> det_points(const DetCurve& curve);

}  // namespace penpress::eval
