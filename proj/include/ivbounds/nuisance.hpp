#pragma once

// Nuisance functions lambda_1(x) = P(Z=1 | X=x) and pi_{ya.z}(x), plus K-fold
// cross-fitting. Every estimator consumes the per-row NuisanceValue produced by
// one of the evaluators below, always from a model that did not see that row.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ivbounds/core_model.hpp"
#include "ivbounds/dataset.hpp"
#include "ivbounds/learners.hpp"

namespace ivb {

struct NuisanceValue {
    double lambda1 = 0.5;
    PiVector pi;
};

struct LearnerSpecs {
    LearnerSpec propensity = LearnerSpec::histogram();
    LearnerSpec joint = LearnerSpec::histogram();
    double eps = 0.01;
};

class PropensityModel {
public:
    PropensityModel() = default;
    PropensityModel(LearnerSpec spec, double eps, std::shared_ptr<const Classifier> classifier);

    /// lambda_1 at x, truncated to [eps, 1 - eps] (a known constant is returned as is).
    double operator()(std::span<const double> x) const;

    double eps() const noexcept { return eps_; }
    const LearnerSpec& spec() const noexcept { return spec_; }

private:
    LearnerSpec spec_ = LearnerSpec::known(0.5);
    double eps_ = 0.01;
    std::shared_ptr<const Classifier> classifier_;
};

class JointModel {
public:
    JointModel() = default;
    JointModel(int arm, LearnerSpec spec, std::shared_ptr<const Classifier> classifier);

    /// (pi_{00.z}, pi_{01.z}, pi_{10.z}, pi_{11.z}) at x.
    std::array<double, 4> operator()(std::span<const double> x) const;

    int arm() const noexcept { return arm_; }
    const LearnerSpec& spec() const noexcept { return spec_; }

private:
    int arm_ = 0;
    LearnerSpec spec_;
    std::shared_ptr<const Classifier> classifier_;
};

PropensityModel fit_propensity(const Dataset& data, const LearnerSpec& learner, double eps);
/// Fits the 4-class law of (Y, A) within the rows having Z = arm.
JointModel fit_joint(const Dataset& data, int arm, const LearnerSpec& learner);

/// Balanced fold labels in [0, K): rows are ranked by (key, index) and rank r
/// goes to fold r mod K, so permuting rows together with their keys permutes
/// the assignment.
std::vector<int> assign_folds(std::span<const std::uint64_t> keys, int folds);
/// As above with keys drawn from the fold-assignment stream of `seed`.
std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed);

class FoldedNuisances {
public:
    struct FoldModels {
        PropensityModel propensity;
        JointModel arm0;
        JointModel arm1;
    };

    FoldedNuisances(std::vector<int> fold_of, std::vector<FoldModels> models, std::uint64_t seed);

    int folds() const noexcept { return static_cast<int>(models_.size()); }
    /// 0-based fold of row i.
    int fold_of(std::size_t i) const { return fold_of_.at(i); }
    const std::vector<int>& fold_assignment() const noexcept { return fold_of_; }
    const FoldModels& models(int fold) const { return models_.at(static_cast<std::size_t>(fold)); }
    std::uint64_t seed() const noexcept { return seed_; }

    /// Nuisances at row i of `data` from the model that excluded i.
    NuisanceValue evaluate(const Dataset& data, std::size_t i) const;
    std::vector<NuisanceValue> evaluate_all(const Dataset& data, unsigned threads = 1) const;

private:
    std::vector<int> fold_of_;
    std::vector<FoldModels> models_;
    std::uint64_t seed_;
};

/// Requires 2 <= K <= n. Throws fold_failure naming the fold when a training
/// complement lacks an instrument arm.
FoldedNuisances cross_fit(const Dataset& data, int folds, const LearnerSpecs& learners,
                          std::uint64_t seed, unsigned threads = 1);

/// Nuisances given in closed form. Null pi entries are structurally zero.
struct ClosedFormNuisance {
    using Function = std::function<double(std::span<const double>)>;

    Function lambda1;
    std::array<Function, 8> pi;  // indexed like PiVector

    NuisanceValue operator()(std::span<const double> x) const;
    std::vector<NuisanceValue> evaluate_all(const Dataset& data, unsigned threads = 1) const;
};

/// Perturbs every non-null function f of `truth` to expit(logit f + e) with a
/// single draw e ~ N(h n^-r, h^2 n^-2r) per function (lambda first, then pi in
/// index order). With h = 0 the truth is returned unchanged. Evaluating a
/// perturbed function where the truth is exactly 0 or 1 throws.
ClosedFormNuisance oracle_noisy_nuisance(const ClosedFormNuisance& truth, std::size_t n, double r,
                                         double h, std::uint64_t seed);

double logit(double p);
double expit(double v) noexcept;

}  // namespace ivb
