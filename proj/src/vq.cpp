#include "penpress/vq.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "penpress/errors.hpp"
#include "penpress/rng.hpp"

namespace penpress::vq {

namespace {

constexpr double kConvergenceTol = 1e-4;
constexpr int kMaxKmeansIterations = 50;
constexpr double kSplitEpsilon = 0.01;  // of per-channel standard deviation

using Matrix5X = Eigen::Matrix<double, 5, Eigen::Dynamic>;

Matrix5X stack(std::span<const FeatureVector> vectors) {
    Matrix5X m(5, static_cast<Eigen::Index>(vectors.size()));
    for (Eigen::Index i = 0; i < m.cols(); ++i) m.col(i) = vectors[static_cast<std::size_t>(i)];
    return m;
}

// Index of the nearest column of `scaled_centroids` for every column of
// `scaled_vectors`, plus the squared distance. Ties pick the lowest centroid
// index. Uses |c|^2 - 2 c.v + |v|^2; the |v|^2 term is added afterwards since
// it does not affect the argmin.
void assign_nearest(const Matrix5X& scaled_centroids, const Eigen::VectorXd& centroid_sq,
                    const Matrix5X& scaled_vectors, std::vector<int>& assignment,
                    Eigen::VectorXd& sq_dist) {
    Eigen::MatrixXd cross = scaled_centroids.transpose() * scaled_vectors;  // K x N
    const Eigen::Index K = cross.rows(), N = cross.cols();
    assignment.resize(static_cast<std::size_t>(N));
    sq_dist.resize(N);
    for (Eigen::Index n = 0; n < N; ++n) {
        int best = 0;
        double best_val = centroid_sq(0) - 2.0 * cross(0, n);
        for (Eigen::Index k = 1; k < K; ++k) {
            double val = centroid_sq(k) - 2.0 * cross(k, n);
            if (val < best_val) {
                best_val = val;
                best = static_cast<int>(k);
            }
        }
        assignment[static_cast<std::size_t>(n)] = best;
        sq_dist(n) = std::max(best_val + scaled_vectors.col(n).squaredNorm(), 0.0);
    }
}

}  // namespace

double weighted_distance(const FeatureVector& a, const FeatureVector& b, const Weights& w) {
    return (w.as_vector().asDiagonal() * (a - b)).norm();
}

FeatureVector to_feature(const dataio::PenSample& s) {
    return (FeatureVector() << s.x, s.y, s.p, s.azimuth, s.altitude).finished();
}

std::vector<FeatureVector> to_features(std::span<const dataio::PenSample> samples) {
    std::vector<FeatureVector> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(to_feature(s));
    return out;
}

Codebook lbg_train(std::span<const FeatureVector> vectors, int bits, const Weights& w,
                   std::uint64_t seed, LbgLog* log) {
    if (bits < 1 || bits > 8) throw std::invalid_argument("lbg_train: bits must be in 1..8");
    const std::size_t target = std::size_t{1} << bits;
    if (vectors.size() < target)
        throw std::invalid_argument("lbg_train: " + std::to_string(vectors.size()) +
                                    " vectors cannot seed " + std::to_string(target) +
                                    " centroids");

    const Matrix5X data = stack(vectors);
    const Eigen::Index N = data.cols();
    const Eigen::Matrix<double, 5, 1> wv = w.as_vector();
    const Matrix5X scaled = wv.asDiagonal() * data;

    Eigen::Matrix<double, 5, 1> mean = data.rowwise().mean();
    Eigen::Matrix<double, 5, 1> delta =
        kSplitEpsilon *
        ((data.colwise() - mean).rowwise().squaredNorm() / static_cast<double>(N))
            .cwiseSqrt();

    Rng rng(seed);
    Matrix5X centroids = mean;
    std::vector<int> assignment;
    Eigen::VectorXd sq_dist;

    while (true) {
        // One weighted k-means phase at the current codebook size.
        LbgLog::Phase phase;
        phase.size = static_cast<int>(centroids.cols());
        double prev_distortion = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < kMaxKmeansIterations; ++iter) {
            Matrix5X scaled_centroids = wv.asDiagonal() * centroids;
            Eigen::VectorXd centroid_sq = scaled_centroids.colwise().squaredNorm();
            assign_nearest(scaled_centroids, centroid_sq, scaled, assignment, sq_dist);
            double distortion = sq_dist.mean();
            phase.distortions.push_back(distortion);

            bool converged = prev_distortion == 0.0 ||
                             (std::isfinite(prev_distortion) &&
                              (prev_distortion - distortion) < kConvergenceTol * prev_distortion);
            prev_distortion = distortion;
            if (converged) break;

            // Update step: centroids move to the mean of their cell. Empty
            // cells respawn on a random member of the fullest cell.
            const Eigen::Index K = centroids.cols();
            Matrix5X sums = Matrix5X::Zero(5, K);
            std::vector<Eigen::Index> counts(static_cast<std::size_t>(K), 0);
            for (Eigen::Index n = 0; n < N; ++n) {
                int k = assignment[static_cast<std::size_t>(n)];
                sums.col(k) += data.col(n);
                ++counts[static_cast<std::size_t>(k)];
            }
            auto fullest =
                std::max_element(counts.begin(), counts.end()) - counts.begin();
            for (Eigen::Index k = 0; k < K; ++k) {
                if (counts[static_cast<std::size_t>(k)] > 0) {
                    centroids.col(k) =
                        sums.col(k) / static_cast<double>(counts[static_cast<std::size_t>(k)]);
                    continue;
                }
                std::uint64_t pick = rng.below(
                    static_cast<std::uint64_t>(counts[static_cast<std::size_t>(fullest)]));
                Eigen::Index seen = 0;
                for (Eigen::Index n = 0; n < N; ++n) {
                    if (assignment[static_cast<std::size_t>(n)] != static_cast<int>(fullest))
                        continue;
                    if (static_cast<std::uint64_t>(seen++) == pick) {
                        centroids.col(k) = data.col(n);
                        break;
                    }
                }
            }
        }
        if (log) log->phases.push_back(std::move(phase));

        if (static_cast<std::size_t>(centroids.cols()) >= target) break;
        Matrix5X split(5, centroids.cols() * 2);
        for (Eigen::Index k = 0; k < centroids.cols(); ++k) {
            split.col(2 * k) = centroids.col(k) - delta;
            split.col(2 * k + 1) = centroids.col(k) + delta;
        }
        centroids = std::move(split);
    }

    Codebook cb;
    cb.bits = bits;
    cb.centroids.reserve(target);
    for (Eigen::Index k = 0; k < centroids.cols(); ++k) cb.centroids.push_back(centroids.col(k));
    return cb;
}

double quantization_distortion(const Codebook& cb, std::span<const FeatureVector> vectors,
                               const Weights& w) {
    if (vectors.empty())
        throw std::invalid_argument("quantization_distortion: empty vector list");
    if (cb.centroids.empty())
        throw std::invalid_argument("quantization_distortion: empty codebook");
    const Eigen::Matrix<double, 5, 1> wv = w.as_vector();
    Matrix5X scaled_centroids = wv.asDiagonal() * stack(cb.centroids);
    Eigen::VectorXd centroid_sq = scaled_centroids.colwise().squaredNorm();
    Matrix5X scaled = wv.asDiagonal() * stack(vectors);
    std::vector<int> assignment;
    Eigen::VectorXd sq_dist;
    assign_nearest(scaled_centroids, centroid_sq, scaled, assignment, sq_dist);
    return sq_dist.cwiseSqrt().mean();
}

MultiSectionModel train_user_model(std::span<const dataio::Signature> train, int sections,
                                   int bits, const Weights& w, std::uint64_t seed) {
    if (train.empty()) throw std::invalid_argument("train_user_model: no training signatures");
    if (sections < 1) throw std::invalid_argument("train_user_model: sections must be >= 1");

    MultiSectionModel model;
    model.user_id = train[0].user_id;
    model.sections = sections;
    model.bits = bits;
    model.weights = w;

    // Pool section k across all training signatures, then train one codebook.
    std::vector<std::vector<FeatureVector>> pools(static_cast<std::size_t>(sections));
    for (const auto& sig : train) {
        auto parts = dataio::split_sections(sig, sections);
        for (int k = 0; k < sections; ++k)
            for (const auto& s : parts[static_cast<std::size_t>(k)])
                pools[static_cast<std::size_t>(k)].push_back(to_feature(s));
    }
    for (int k = 0; k < sections; ++k) {
        const auto& pool = pools[static_cast<std::size_t>(k)];
        if (pool.size() < (std::size_t{1} << bits))
            throw std::invalid_argument(
                "train_user_model: section " + std::to_string(k + 1) + " pools " +
                std::to_string(pool.size()) + " vectors, need " +
                std::to_string(std::size_t{1} << bits));
        model.codebooks.push_back(
            lbg_train(pool, bits, w, mix_seed(seed, "section-" + std::to_string(k + 1))));
    }
    return model;
}

double score(const MultiSectionModel& model, const dataio::Signature& sig) {
    auto parts = dataio::split_sections(sig, model.sections);
    double total = 0.0;
    for (int k = 0; k < model.sections; ++k) {
        auto features = to_features(parts[static_cast<std::size_t>(k)]);
        total += quantization_distortion(model.codebooks[static_cast<std::size_t>(k)], features,
                                         model.weights);
    }
    return total / static_cast<double>(model.sections);
}

namespace {

void append_number(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

double parse_number(std::string_view token, std::size_t line, const char* what) {
    double v = 0.0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
        throw ParseError(std::string("malformed ") + what + " '" + std::string(token) + "'", line);
    return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

}  // namespace

MultiSectionModel parse_model(std::string_view text) {
    MultiSectionModel model;
    std::size_t pos = 0, line_no = 0;
    bool saw_header = false, saw_weights = false;
    std::size_t per_section = 0;

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
            if (fields.size() != 5 || fields[0] != "#VQMODEL" || fields[1] != "v1")
                throw ParseError("expected '#VQMODEL v1 user=.. s=.. bits=..' header", line_no);
            auto field = [&](std::size_t i, std::string_view key) {
                if (fields[i].substr(0, key.size()) != key || fields[i].size() <= key.size() ||
                    fields[i][key.size()] != '=')
                    throw ParseError("expected '" + std::string(key) + "=' in header", line_no);
                return fields[i].substr(key.size() + 1);
            };
            model.user_id = std::string(field(2, "user"));
            model.sections = static_cast<int>(parse_number(field(3, "s"), line_no, "s"));
            model.bits = static_cast<int>(parse_number(field(4, "bits"), line_no, "bits"));
            if (model.sections < 1 || model.bits < 1 || model.bits > 8)
                throw ParseError("header s/bits out of range", line_no);
            per_section = std::size_t{1} << model.bits;
            saw_header = true;
            continue;
        }
        if (!saw_weights) {
            if (fields.size() != 6 || fields[0] != "weights")
                throw ParseError("expected 'weights' line with 5 values", line_no);
            model.weights.x = parse_number(fields[1], line_no, "weight");
            model.weights.y = parse_number(fields[2], line_no, "weight");
            model.weights.p = parse_number(fields[3], line_no, "weight");
            model.weights.azimuth = parse_number(fields[4], line_no, "weight");
            model.weights.altitude = parse_number(fields[5], line_no, "weight");
            saw_weights = true;
            continue;
        }
        if (fields[0] == "section") {
            if (fields.size() != 2 ||
                parse_number(fields[1], line_no, "section index") !=
                    static_cast<double>(model.codebooks.size() + 1))
                throw ParseError("sections must appear in order starting at 1", line_no);
            if (!model.codebooks.empty() &&
                model.codebooks.back().centroids.size() != per_section)
                throw ParseError("previous section has wrong centroid count", line_no);
            model.codebooks.push_back(Codebook{model.bits, {}});
            continue;
        }
        if (model.codebooks.empty()) throw ParseError("centroid row before any section", line_no);
        if (fields.size() != 5) throw ParseError("expected 5 values per centroid row", line_no);
        FeatureVector v;
        for (int i = 0; i < 5; ++i)
            v(i) = parse_number(fields[static_cast<std::size_t>(i)], line_no, "centroid value");
        if (model.codebooks.back().centroids.size() >= per_section)
            throw ParseError("too many centroid rows in section", line_no);
        model.codebooks.back().centroids.push_back(v);
    }

    if (!saw_header) throw ParseError("expected '#VQMODEL v1' header", 1);
    if (!saw_weights) throw ParseError("missing 'weights' line", line_no);
    if (static_cast<int>(model.codebooks.size()) != model.sections)
        throw ParseError("expected " + std::to_string(model.sections) + " sections, got " +
                             std::to_string(model.codebooks.size()),
                         line_no);
    if (model.codebooks.back().centroids.size() != per_section)
        throw ParseError("last section has wrong centroid count", line_no);
    return model;
}

std::string write_model(const MultiSectionModel& model) {
    if (model.user_id.empty() || model.user_id.find(' ') != std::string::npos)
        throw std::invalid_argument("write_model: bad user id");
    if (static_cast<int>(model.codebooks.size()) != model.sections)
        throw std::invalid_argument("write_model: codebook count != sections");

    std::string out = "#VQMODEL v1 user=" + model.user_id +
                      " s=" + std::to_string(model.sections) +
                      " bits=" + std::to_string(model.bits) + "\nweights";
    for (double w : {model.weights.x, model.weights.y, model.weights.p, model.weights.azimuth,
                     model.weights.altitude}) {
        out.push_back(' ');
        append_number(out, w);
    }
    out.push_back('\n');
    for (std::size_t k = 0; k < model.codebooks.size(); ++k) {
        const Codebook& cb = model.codebooks[k];
        if (cb.centroids.size() != (std::size_t{1} << model.bits))
            throw std::invalid_argument("write_model: section " + std::to_string(k + 1) +
                                        " has wrong centroid count");
        out += "section " + std::to_string(k + 1) + "\n";
        for (const FeatureVector& c : cb.centroids) {
            for (int i = 0; i < 5; ++i) {
                if (i > 0) out.push_back(' ');
                append_number(out, c(i));
            }
            out.push_back('\n');
        }
    }
    return out;
}

MultiSectionModel read_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_model(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line());
    }
}

void write_model_file(const std::filesystem::path& path, const MultiSectionModel& model) {
    std::string text = write_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace penpress::vq
