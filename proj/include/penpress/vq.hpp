#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "penpress/dataio.hpp"

// Per-user multi-section vector-quantization recognizer. Feature vectors are
// the five pen channels; similarity is a per-channel weighted Euclidean
// distance, with the pressure weight carrying the stylus-dependent scale.
namespace penpress::vq {

using FeatureVector = Eigen::Matrix<double, 5, 1>;

struct Weights {
    double x = 1.0;
    double y = 1.0;
    double p = 1.0;
    double azimuth = 1.0;
    double altitude = 1.0;

    Eigen::Matrix<double, 5, 1> as_vector() const {
        return (Eigen::Matrix<double, 5, 1>() << x, y, p, azimuth, altitude).finished();
    }
};

// sqrt(sum_i (w_i * (a_i - b_i))^2)
double weighted_distance(const FeatureVector& a, const FeatureVector& b, const Weights& w);

FeatureVector to_feature(const dataio::PenSample& s);
std::vector<FeatureVector> to_features(std::span<const dataio::PenSample> samples);

struct Codebook {
    int bits = 0;
    std::vector<FeatureVector> centroids;  // exactly 2^bits
};

// Per-pass training trace: the mean squared weighted distance logged at each
// k-means iteration, grouped by codebook-size phase. Within a phase the
// sequence never increases; it may jump upward at a centroid split.
struct LbgLog {
    struct Phase {
        int size = 0;
        std::vector<double> distortions;
    };
    std::vector<Phase> phases;
};

// Centroid-splitting LBG: start at the global centroid, then alternate
// "split every centroid by a +-epsilon perturbation" with weighted k-means
// until 2^bits centroids. epsilon is 0.01 of the pool's per-channel standard
// deviation. Nearest-centroid ties go to the lowest index; a cell left empty
// is reseeded with a random vector of the fullest cell (drawn from seed).
Codebook lbg_train(std::span<const FeatureVector> vectors, int bits, const Weights& w,
                   std::uint64_t seed = 0, LbgLog* log = nullptr);

// Mean over vectors of the (unsquared) weighted distance to the nearest
// centroid: the quantization score, lower = closer to the codebook.
double quantization_distortion(const Codebook& cb, std::span<const FeatureVector> vectors,
                               const Weights& w);

struct MultiSectionModel {
    std::string user_id;
    int sections = 2;
    int bits = 0;
    Weights weights;
    std::vector<Codebook> codebooks;  // one per temporal section
};

// Pools section k of every training signature and trains one codebook per
// section. Throws when any section's pool is smaller than 2^bits, naming the
// section.
MultiSectionModel train_user_model(std::span<const dataio::Signature> train, int sections,
                                   int bits, const Weights& w, std::uint64_t seed = 0);

// Mean over sections of the section's quantization distortion. Lower = more
// similar to the modeled writer.
double score(const MultiSectionModel& model, const dataio::Signature& sig);

// Text serialization:
//   #VQMODEL v1 user=<id> s=<n> bits=<b>
//   weights <wx> <wy> <wp> <wazimuth> <waltitude>
//   section 1
//   <2^bits centroid rows of 5 numbers>
//   ...
MultiSectionModel parse_model(std::string_view text);
std::string write_model(const MultiSectionModel& model);
MultiSectionModel read_model_file(const std::filesystem::path& path);
void write_model_file(const std::filesystem::path& path, const MultiSectionModel& model);

}  // namespace penpress::vq
