#pragma once

// Built-in probabilistic classifiers used for the nuisance regressions. All of
// them map a covariate row to a probability vector over `classes` labels and
// are immutable once fitted.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ivb {

struct LearnerSpec {
    enum class Kind { constant, histogram, knn, softmax, known };

    Kind kind = Kind::histogram;
    double known_value = 0.5;   // known
    int max_depth = 4;          // histogram
    int min_cell = 25;          // histogram: minimum rows per cell
    double alpha = 1.0;         // Laplace pseudo-count (histogram, knn)
    int neighbors = 50;         // knn
    int degree = 1;             // softmax: per-coordinate polynomial degree
    double ridge = 1e-4;        // softmax: L2 penalty on all coefficients
    int max_iter = 100;         // softmax: Newton iterations

    static LearnerSpec constant(double alpha = 0.0);
    static LearnerSpec histogram(int max_depth = 4, int min_cell = 25, double alpha = 1.0);
    static LearnerSpec knn(int neighbors, double alpha = 1.0);
    static LearnerSpec softmax(int degree = 1, double ridge = 1e-4);
    static LearnerSpec known(double value);

    /// Parses "name" or "name:key=value,...", e.g. "histogram:depth=3,min=10",
    /// "knn:k=25", "softmax:degree=2", "known:0.5", "constant".
    static LearnerSpec parse(std::string_view text);
    /// Canonical text form; parse(describe()) reproduces the spec.
    std::string describe() const;
};

/// Row-major feature matrix view.
struct FeatureView {
    std::span<const double> values;
    std::size_t dims = 0;

    std::size_t rows() const noexcept { return dims == 0 ? 0 : values.size() / dims; }
    std::span<const double> row(std::size_t i) const noexcept { return values.subspan(i * dims, dims); }
};

class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::size_t classes() const noexcept = 0;
    /// Writes class probabilities for `x` into `out` (size classes()).
    virtual void predict(std::span<const double> x, std::span<double> out) const = 0;
};

/// Fits `spec` on (features, labels in [0, classes), weights). When `features`
/// has zero dimensions every learner reduces to pooled frequencies. Throws
/// ivb::Error(fit_failure) on empty input; `known` is not a classifier.
std::shared_ptr<const Classifier> fit_classifier(const LearnerSpec& spec, FeatureView features,
                                                 std::span<const int> labels,
                                                 std::span<const double> weights, std::size_t classes);

/// Multinomial logistic regression fitted by damped Newton steps on the
/// ridge-penalized weighted log-likelihood.
class SoftmaxClassifier final : public Classifier {
public:
    SoftmaxClassifier(const LearnerSpec& spec, FeatureView features, std::span<const int> labels,
                      std::span<const double> weights, std::size_t classes);

    std::size_t classes() const noexcept override { return classes_; }
    void predict(std::span<const double> x, std::span<double> out) const override;

    /// Penalized log-likelihood after each accepted iteration (entry 0 is the
    /// starting point). Nondecreasing by construction.
    const std::vector<double>& objective_trace() const noexcept { return trace_; }

private:
    std::vector<double> expand(std::span<const double> x) const;

    std::size_t classes_;
    std::size_t dims_;
    int degree_;
    std::vector<double> center_;
    std::vector<double> scale_;
    std::vector<double> coef_;  // (classes - 1) x basis size; class 0 is the reference
    std::vector<double> trace_;
};

}  // namespace ivb
