#include "ivbounds/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "ivbounds/error.hpp"

namespace ivb {

LearnerSpec LearnerSpec::constant(double alpha) {
    LearnerSpec s;
    s.kind = Kind::constant;
    s.alpha = alpha;
    return s;
}

LearnerSpec LearnerSpec::histogram(int max_depth, int min_cell, double alpha) {
    LearnerSpec s;
    s.kind = Kind::histogram;
    s.max_depth = max_depth;
    s.min_cell = min_cell;
    s.alpha = alpha;
    return s;
}

LearnerSpec LearnerSpec::knn(int neighbors, double alpha) {
    LearnerSpec s;
    s.kind = Kind::knn;
    s.neighbors = neighbors;
    s.alpha = alpha;
    return s;
}

LearnerSpec LearnerSpec::softmax(int degree, double ridge) {
    LearnerSpec s;
    s.kind = Kind::softmax;
    s.degree = degree;
    s.ridge = ridge;
    return s;
}

LearnerSpec LearnerSpec::known(double value) {
    LearnerSpec s;
    s.kind = Kind::known;
    s.known_value = value;
    return s;
}

namespace {

double parse_number(std::string_view text, std::string_view context) {
    std::string buffer(text);
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(buffer, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != buffer.size() || buffer.empty())
        throw Error(ErrorCode::invalid_argument,
                    "learner option '" + std::string(context) + "' expects a number, got '" + buffer + "'");
    return value;
}

int parse_int(std::string_view text, std::string_view context) {
    const double v = parse_number(text, context);
    if (v != std::floor(v) || v < 0)
        throw Error(ErrorCode::invalid_argument, "learner option '" + std::string(context) + "' expects a nonnegative integer");
    return static_cast<int>(v);
}

}  // namespace

LearnerSpec LearnerSpec::parse(std::string_view text) {
    const auto colon = text.find(':');
    const std::string_view name = text.substr(0, colon);
    const std::string_view options = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

    LearnerSpec spec;
    if (name == "constant") {
        spec = constant();
    } else if (name == "histogram") {
        spec = histogram();
    } else if (name == "knn") {
        spec = knn(50);
    } else if (name == "softmax") {
        spec = softmax();
    } else if (name == "known") {
        if (options.empty()) throw Error(ErrorCode::invalid_argument, "learner 'known' needs a value, e.g. known:0.5");
        return known(parse_number(options, "known"));
    } else {
        throw Error(ErrorCode::invalid_argument, "unknown learner '" + std::string(name) + "'");
    }

    std::string_view rest = options;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = rest.substr(0, comma);
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::invalid_argument, "learner option '" + std::string(item) + "' must be key=value");
        const std::string_view key = item.substr(0, eq);
        const std::string_view value = item.substr(eq + 1);
        if (key == "alpha") spec.alpha = parse_number(value, key);
        else if (key == "depth" && spec.kind == Kind::histogram) spec.max_depth = parse_int(value, key);
        else if (key == "min" && spec.kind == Kind::histogram) spec.min_cell = parse_int(value, key);
        else if (key == "k" && spec.kind == Kind::knn) spec.neighbors = parse_int(value, key);
        else if (key == "degree" && spec.kind == Kind::softmax) spec.degree = parse_int(value, key);
        else if (key == "ridge" && spec.kind == Kind::softmax) spec.ridge = parse_number(value, key);
        else if (key == "iter" && spec.kind == Kind::softmax) spec.max_iter = parse_int(value, key);
        else
            throw Error(ErrorCode::invalid_argument,
                        "option '" + std::string(key) + "' does not apply to learner '" + std::string(name) + "'");
    }
    if (spec.alpha < 0) throw Error(ErrorCode::invalid_argument, "Laplace alpha must be nonnegative");
    if (spec.kind == Kind::knn && spec.neighbors < 1) throw Error(ErrorCode::invalid_argument, "knn needs k >= 1");
    if (spec.kind == Kind::softmax && spec.degree < 1) throw Error(ErrorCode::invalid_argument, "softmax degree must be >= 1");
    return spec;
}

std::string LearnerSpec::describe() const {
    std::ostringstream out;
    out.precision(17);
    switch (kind) {
        case Kind::constant: out << "constant:alpha=" << alpha; break;
        case Kind::histogram:
            out << "histogram:depth=" << max_depth << ",min=" << min_cell << ",alpha=" << alpha;
            break;
        case Kind::knn: out << "knn:k=" << neighbors << ",alpha=" << alpha; break;
        case Kind::softmax:
            out << "softmax:degree=" << degree << ",ridge=" << ridge << ",iter=" << max_iter;
            break;
        case Kind::known: out << "known:" << known_value; break;
    }
    return out.str();
}

namespace {

// Sum of squares that does not depend on the order of the class labels.
double sum_squares_sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double e : v) s += e * e;
    return s;
}

// Total weight times Gini impurity.
double impurity(double total, const std::vector<double>& class_weight) {
    if (total <= 0.0) return 0.0;
    return total - sum_squares_sorted(class_weight) / total;
}

std::vector<double> smoothed(const std::vector<double>& class_weight, double alpha) {
    std::vector<double> sorted(class_weight);
    std::sort(sorted.begin(), sorted.end());
    const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
    const double denom = total + alpha * static_cast<double>(class_weight.size());
    std::vector<double> out(class_weight.size());
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c] = denom > 0.0 ? (class_weight[c] + alpha) / denom : 1.0 / static_cast<double>(out.size());
    }
    return out;
}

class ConstantClassifier final : public Classifier {
public:
    explicit ConstantClassifier(std::vector<double> probs) : probs_(std::move(probs)) {}
    std::size_t classes() const noexcept override { return probs_.size(); }
    void predict(std::span<const double>, std::span<double> out) const override {
        std::copy(probs_.begin(), probs_.end(), out.begin());
    }

private:
    std::vector<double> probs_;
};

class HistogramTree final : public Classifier {
public:
    HistogramTree(const LearnerSpec& spec, FeatureView features, std::span<const int> labels,
                  std::span<const double> weights, std::size_t classes)
        : classes_(classes), spec_(spec), features_(features), labels_(labels), weights_(weights) {
        std::vector<std::size_t> rows(labels.size());
        std::iota(rows.begin(), rows.end(), 0);
        grow(rows, 0);
    }

    std::size_t classes() const noexcept override { return classes_; }

    void predict(std::span<const double> x, std::span<double> out) const override {
        std::size_t node = 0;
        while (nodes_[node].feature >= 0) {
            const Node& n = nodes_[node];
            node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        std::copy(nodes_[node].probs.begin(), nodes_[node].probs.end(), out.begin());
    }

private:
    struct Node {
        int feature = -1;
        double threshold = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
        std::vector<double> probs;
    };

    std::size_t grow(const std::vector<std::size_t>& rows, int depth) {
        const std::size_t id = nodes_.size();
        nodes_.emplace_back();

        std::vector<double> class_weight(classes_, 0.0);
        double total = 0.0;
        for (std::size_t i : rows) {
            class_weight[static_cast<std::size_t>(labels_[i])] += weights_[i];
            total += weights_[i];
        }

        const std::size_t min_cell = static_cast<std::size_t>(std::max(spec_.min_cell, 1));
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_gain = 1e-12 * std::max(total, 1.0);
        if (depth < spec_.max_depth && rows.size() >= 2 * min_cell) {
            const double parent = impurity(total, class_weight);
            std::vector<std::size_t> order(rows);
            for (std::size_t f = 0; f < features_.dims; ++f) {
                std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
                    return features_.row(l)[f] < features_.row(r)[f];
                });
                std::vector<double> left(classes_, 0.0);
                double left_total = 0.0;
                for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                    const std::size_t i = order[k];
                    left[static_cast<std::size_t>(labels_[i])] += weights_[i];
                    left_total += weights_[i];
                    const double here = features_.row(i)[f];
                    const double next = features_.row(order[k + 1])[f];
                    if (!(here < next)) continue;
                    if (k + 1 < min_cell || order.size() - k - 1 < min_cell) continue;
                    std::vector<double> right(classes_);
                    for (std::size_t c = 0; c < classes_; ++c) right[c] = class_weight[c] - left[c];
                    const double gain =
                        parent - impurity(left_total, left) - impurity(total - left_total, right);
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_feature = static_cast<int>(f);
                        best_threshold = here + (next - here) / 2.0;
                        if (!(best_threshold < next)) best_threshold = here;
                    }
                }
            }
        }

        if (best_feature < 0) {
            nodes_[id].probs = smoothed(class_weight, spec_.alpha);
            return id;
        }
        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t i : rows) {
            (features_.row(i)[static_cast<std::size_t>(best_feature)] <= best_threshold ? left_rows : right_rows)
                .push_back(i);
        }
        nodes_[id].feature = best_feature;
        nodes_[id].threshold = best_threshold;
        const std::size_t l = grow(left_rows, depth + 1);
        const std::size_t r = grow(right_rows, depth + 1);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    std::size_t classes_;
    LearnerSpec spec_;
    // Only valid during construction.
    FeatureView features_;
    std::span<const int> labels_;
    std::span<const double> weights_;
    std::vector<Node> nodes_;
};

struct Standardizer {
    std::vector<double> center;
    std::vector<double> scale;

    Standardizer(FeatureView features) : center(features.dims, 0.0), scale(features.dims, 1.0) {
        const std::size_t n = features.rows();
        if (n == 0) return;
        for (std::size_t j = 0; j < features.dims; ++j) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += features.row(i)[j];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = features.row(i)[j] - mean;
                var += d * d;
            }
            var /= static_cast<double>(n);
            center[j] = mean;
            scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
        }
    }
};

class KnnClassifier final : public Classifier {
public:
    KnnClassifier(const LearnerSpec& spec, FeatureView features, std::span<const int> labels,
                  std::span<const double> weights, std::size_t classes)
        : classes_(classes), alpha_(spec.alpha), k_(static_cast<std::size_t>(spec.neighbors)),
          dims_(features.dims), standardizer_(features), labels_(labels.begin(), labels.end()),
          weights_(weights.begin(), weights.end()) {
        const std::size_t n = labels.size();
        points_.resize(n * dims_);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < dims_; ++j)
                points_[i * dims_ + j] = (features.row(i)[j] - standardizer_.center[j]) / standardizer_.scale[j];
    }

    std::size_t classes() const noexcept override { return classes_; }

    void predict(std::span<const double> x, std::span<double> out) const override {
        const std::size_t n = labels_.size();
        std::vector<std::pair<double, std::size_t>> dist(n);
        for (std::size_t i = 0; i < n; ++i) {
            double d = 0.0;
            for (std::size_t j = 0; j < dims_; ++j) {
                const double diff = points_[i * dims_ + j] - (x[j] - standardizer_.center[j]) / standardizer_.scale[j];
                d += diff * diff;
            }
            dist[i] = {d, i};
        }
        const std::size_t k = std::min(k_, n);
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        std::vector<double> class_weight(classes_, 0.0);
        for (std::size_t m = 0; m < k; ++m) {
            const std::size_t i = dist[m].second;
            class_weight[static_cast<std::size_t>(labels_[i])] += weights_[i];
        }
        const auto probs = smoothed(class_weight, alpha_);
        std::copy(probs.begin(), probs.end(), out.begin());
    }

private:
    std::size_t classes_;
    double alpha_;
    std::size_t k_;
    std::size_t dims_;
    Standardizer standardizer_;
    std::vector<double> points_;
    std::vector<int> labels_;
    std::vector<double> weights_;
};

void log_softmax(std::span<const double> scores, std::span<double> out) {
    const double top = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double s : scores) total += std::exp(s - top);
    const double log_total = top + std::log(total);
    for (std::size_t c = 0; c < scores.size(); ++c) out[c] = scores[c] - log_total;
}

}  // namespace

SoftmaxClassifier::SoftmaxClassifier(const LearnerSpec& spec, FeatureView features,
                                     std::span<const int> labels, std::span<const double> weights,
                                     std::size_t classes)
    : classes_(classes), dims_(features.dims), degree_(spec.degree) {
    const Standardizer standardizer(features);
    center_ = standardizer.center;
    scale_ = standardizer.scale;

    const std::size_t n = labels.size();
    const std::size_t basis = 1 + dims_ * static_cast<std::size_t>(degree_);
    const std::size_t free_classes = classes_ - 1;
    const std::size_t params = free_classes * basis;
    coef_.assign(params, 0.0);
    if (params == 0) return;

    double weight_sum = 0.0;
    for (double w : weights) weight_sum += w;
    std::vector<double> unit_weights(n);
    for (std::size_t i = 0; i < n; ++i) unit_weights[i] = weights[i] * static_cast<double>(n) / weight_sum;

    std::vector<double> design(n * basis);
    for (std::size_t i = 0; i < n; ++i) {
        const auto phi = expand(features.dims == 0 ? std::span<const double>{} : features.row(i));
        std::copy(phi.begin(), phi.end(), design.begin() + static_cast<std::ptrdiff_t>(i * basis));
    }

    std::vector<double> scores(classes_), logp(classes_);
    auto objective = [&](const std::vector<double>& coef, std::vector<double>* probs) {
        double value = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            scores[0] = 0.0;
            for (std::size_t c = 1; c < classes_; ++c) {
                double s = 0.0;
                for (std::size_t k = 0; k < basis; ++k) s += coef[(c - 1) * basis + k] * design[i * basis + k];
                scores[c] = s;
            }
            log_softmax(scores, logp);
            value += unit_weights[i] * logp[static_cast<std::size_t>(labels[i])];
            if (probs)
                for (std::size_t c = 0; c < classes_; ++c) (*probs)[i * classes_ + c] = std::exp(logp[c]);
        }
        double penalty = 0.0;
        for (double b : coef) penalty += b * b;
        return value - 0.5 * spec.ridge * penalty;
    };

    std::vector<double> probs(n * classes_);
    double current = objective(coef_, &probs);
    trace_.push_back(current);

    for (int iter = 0; iter < spec.max_iter; ++iter) {
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params));
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(params), static_cast<Eigen::Index>(params));
        for (std::size_t i = 0; i < n; ++i) {
            const double wi = unit_weights[i];
            const double* phi = &design[i * basis];
            for (std::size_t c = 1; c < classes_; ++c) {
                const double pc = probs[i * classes_ + c];
                const double resid = (static_cast<std::size_t>(labels[i]) == c ? 1.0 : 0.0) - pc;
                for (std::size_t k = 0; k < basis; ++k)
                    grad[static_cast<Eigen::Index>((c - 1) * basis + k)] += wi * resid * phi[k];
                for (std::size_t c2 = 1; c2 < classes_; ++c2) {
                    const double curv = wi * pc * ((c == c2 ? 1.0 : 0.0) - probs[i * classes_ + c2]);
                    if (curv == 0.0) continue;
                    for (std::size_t k = 0; k < basis; ++k)
                        for (std::size_t k2 = 0; k2 < basis; ++k2)
                            hess(static_cast<Eigen::Index>((c - 1) * basis + k),
                                 static_cast<Eigen::Index>((c2 - 1) * basis + k2)) += curv * phi[k] * phi[k2];
                }
            }
        }
        for (std::size_t p = 0; p < params; ++p) {
            grad[static_cast<Eigen::Index>(p)] -= spec.ridge * coef_[p];
            hess(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) += spec.ridge;
        }
        const Eigen::VectorXd step = hess.ldlt().solve(grad);
        if (!step.allFinite()) break;

        bool accepted = false;
        double scale = 1.0;
        std::vector<double> trial(params);
        std::vector<double> trial_probs(n * classes_);
        double trial_value = current;
        for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
            for (std::size_t p = 0; p < params; ++p) trial[p] = coef_[p] + scale * step[static_cast<Eigen::Index>(p)];
            trial_value = objective(trial, &trial_probs);
            if (trial_value >= current) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        const double improvement = trial_value - current;
        coef_ = trial;
        probs.swap(trial_probs);
        current = trial_value;
        trace_.push_back(current);
        if (improvement <= 1e-10 * (1.0 + std::fabs(current))) break;
    }
}

std::vector<double> SoftmaxClassifier::expand(std::span<const double> x) const {
    std::vector<double> phi;
    phi.reserve(1 + dims_ * static_cast<std::size_t>(degree_));
    phi.push_back(1.0);
    for (std::size_t j = 0; j < dims_; ++j) {
        const double s = (x[j] - center_[j]) / scale_[j];
        double power = 1.0;
        for (int d = 0; d < degree_; ++d) {
            power *= s;
            phi.push_back(power);
        }
    }
    return phi;
}

void SoftmaxClassifier::predict(std::span<const double> x, std::span<double> out) const {
    const auto phi = expand(x);
    const std::size_t basis = phi.size();
    std::vector<double> scores(classes_, 0.0), logp(classes_);
    for (std::size_t c = 1; c < classes_; ++c) {
        double s = 0.0;
        for (std::size_t k = 0; k < basis; ++k) s += coef_[(c - 1) * basis + k] * phi[k];
        scores[c] = s;
    }
    log_softmax(scores, logp);
    for (std::size_t c = 0; c < classes_; ++c) out[c] = std::exp(logp[c]);
}

std::shared_ptr<const Classifier> fit_classifier(const LearnerSpec& spec, FeatureView features,
                                                 std::span<const int> labels,
                                                 std::span<const double> weights, std::size_t classes) {
    if (labels.empty()) throw Error(ErrorCode::fit_failure, "cannot fit a learner on zero rows");
    if (labels.size() != weights.size() || (features.dims > 0 && features.rows() != labels.size()))
        throw Error(ErrorCode::invalid_argument, "learner inputs have inconsistent lengths");
    for (int label : labels)
        if (label < 0 || static_cast<std::size_t>(label) >= classes)
            throw Error(ErrorCode::invalid_argument, "class label out of range");

    switch (spec.kind) {
        case LearnerSpec::Kind::constant: {
            std::vector<double> class_weight(classes, 0.0);
            for (std::size_t i = 0; i < labels.size(); ++i)
                class_weight[static_cast<std::size_t>(labels[i])] += weights[i];
            return std::make_shared<ConstantClassifier>(smoothed(class_weight, spec.alpha));
        }
        case LearnerSpec::Kind::histogram:
            return std::make_shared<HistogramTree>(spec, features, labels, weights, classes);
        case LearnerSpec::Kind::knn:
            return std::make_shared<KnnClassifier>(spec, features, labels, weights, classes);
        case LearnerSpec::Kind::softmax:
            return std::make_shared<SoftmaxClassifier>(spec, features, labels, weights, classes);
        case LearnerSpec::Kind::known:
            break;
    }
    throw Error(ErrorCode::invalid_argument, "learner 'known' has no fitted classifier");
}

}  // namespace ivb
