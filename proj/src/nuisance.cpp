#include "ivbounds/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ivbounds/error.hpp"
#include "ivbounds/parallel.hpp"
#include "ivbounds/rng.hpp"

namespace ivb {

PropensityModel::PropensityModel(LearnerSpec spec, double eps, std::shared_ptr<const Classifier> classifier)
    : spec_(std::move(spec)), eps_(eps), classifier_(std::move(classifier)) {}

double PropensityModel::operator()(std::span<const double> x) const {
    if (spec_.kind == LearnerSpec::Kind::known) return spec_.known_value;
    std::array<double, 2> p{};
    classifier_->predict(x, p);
    return std::clamp(p[1], eps_, 1.0 - eps_);
}

JointModel::JointModel(int arm, LearnerSpec spec, std::shared_ptr<const Classifier> classifier)
    : arm_(arm), spec_(std::move(spec)), classifier_(std::move(classifier)) {}

std::array<double, 4> JointModel::operator()(std::span<const double> x) const {
    std::array<double, 4> p{};
    classifier_->predict(x, p);
    return p;
}

PropensityModel fit_propensity(const Dataset& data, const LearnerSpec& learner, double eps) {
    if (!(eps > 0.0 && eps < 0.5)) throw Error(ErrorCode::invalid_argument, "truncation eps must lie in (0, 0.5)");
    if (data.empty()) throw Error(ErrorCode::empty_data, "cannot fit a propensity model on zero rows");
    if (learner.kind == LearnerSpec::Kind::known) {
        const double c = learner.known_value;
        if (!(c > 0.0 && c < 1.0)) throw Error(ErrorCode::invalid_argument, "known propensity must lie in (0, 1)");
        if (c < eps || c > 1.0 - eps)
            throw Error(ErrorCode::invalid_argument, "known propensity lies outside [eps, 1 - eps]");
        return PropensityModel(learner, eps, nullptr);
    }
    const bool all_equal = std::all_of(data.z.begin(), data.z.end(), [&](int v) { return v == data.z.front(); });
    if (all_equal)
        throw Error(ErrorCode::fit_failure, "propensity fit needs both instrument values; all rows have Z=" +
                                                std::to_string(data.z.front()));
    auto classifier = fit_classifier(learner, {data.x, data.dims}, data.z, data.w, 2);
    return PropensityModel(learner, eps, std::move(classifier));
}

JointModel fit_joint(const Dataset& data, int arm, const LearnerSpec& learner) {
    if (arm != 0 && arm != 1) throw Error(ErrorCode::invalid_argument, "instrument arm must be 0 or 1");
    if (learner.kind == LearnerSpec::Kind::known)
        throw Error(ErrorCode::invalid_argument, "learner 'known' applies only to the propensity");
    std::vector<double> x;
    std::vector<int> labels;
    std::vector<double> weights;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.z[i] != arm) continue;
        const double y = data.y[i];
        if (y != 0.0 && y != 1.0)
            throw Error(ErrorCode::non_binary_value,
                        "joint model needs a 0/1 outcome (row " + std::to_string(i + 1) + ")");
        const auto row = data.row(i);
        x.insert(x.end(), row.begin(), row.end());
        labels.push_back(2 * static_cast<int>(y) + data.a[i]);
        weights.push_back(data.w[i]);
    }
    if (labels.empty())
        throw Error(ErrorCode::fit_failure, "instrument arm Z=" + std::to_string(arm) + " has no rows");
    auto classifier = fit_classifier(learner, {x, data.dims}, labels, weights, 4);
    return JointModel(arm, learner, std::move(classifier));
}

std::vector<int> assign_folds(std::span<const std::uint64_t> keys, int folds) {
    if (folds < 2 || static_cast<std::size_t>(folds) > keys.size())
        throw Error(ErrorCode::invalid_argument, "fold count must satisfy 2 <= K <= n (K=" + std::to_string(folds) +
                                                     ", n=" + std::to_string(keys.size()) + ")");
    std::vector<std::size_t> order(keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return keys[l] != keys[r] ? keys[l] < keys[r] : l < r;
    });
    std::vector<int> fold(keys.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank)
        fold[order[rank]] = static_cast<int>(rank % static_cast<std::size_t>(folds));
    return fold;
}

std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed) {
    RandomStream rng(seed, stream_id({tags::fold_assignment}));
    std::vector<std::uint64_t> keys(n);
    for (auto& k : keys) k = rng();
    return assign_folds(keys, folds);
}

FoldedNuisances::FoldedNuisances(std::vector<int> fold_of, std::vector<FoldModels> models, std::uint64_t seed)
    : fold_of_(std::move(fold_of)), models_(std::move(models)), seed_(seed) {}

NuisanceValue FoldedNuisances::evaluate(const Dataset& data, std::size_t i) const {
    if (i >= fold_of_.size() || data.size() != fold_of_.size())
        throw Error(ErrorCode::fold_failure, "row " + std::to_string(i + 1) + " has no fold model");
    const FoldModels& m = models_[static_cast<std::size_t>(fold_of_[i])];
    const auto x = data.row(i);
    return {m.propensity(x), PiVector::from_arms(m.arm0(x), m.arm1(x))};
}

std::vector<NuisanceValue> FoldedNuisances::evaluate_all(const Dataset& data, unsigned threads) const {
    if (data.size() != fold_of_.size())
        throw Error(ErrorCode::fold_failure, "dataset size does not match the fold assignment");
    std::vector<NuisanceValue> out(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) { out[i] = evaluate(data, i); });
    return out;
}

FoldedNuisances cross_fit(const Dataset& data, int folds, const LearnerSpecs& learners, std::uint64_t seed,
                          unsigned threads) {
    const std::size_t n = data.size();
    if (n == 0) throw Error(ErrorCode::empty_data, "cannot cross-fit on zero rows");
    if (folds < 2 || static_cast<std::size_t>(folds) > n)
        throw Error(ErrorCode::invalid_argument,
                    "fold count must satisfy 2 <= K <= n (K=" + std::to_string(folds) + ", n=" + std::to_string(n) + ")");
    auto fold_of = assign_folds(n, folds, seed);
    std::vector<FoldedNuisances::FoldModels> models(static_cast<std::size_t>(folds));
    parallel_for(models.size(), threads, [&](std::size_t k) {
        std::vector<std::size_t> train;
        train.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            if (fold_of[i] != static_cast<int>(k)) train.push_back(i);
        const Dataset complement = data.subset(train);
        for (int arm : {0, 1}) {
            if (std::find(complement.z.begin(), complement.z.end(), arm) == complement.z.end())
                throw Error(ErrorCode::fold_failure, "training complement of fold " + std::to_string(k + 1) +
                                                         " has no rows with Z=" + std::to_string(arm));
        }
        models[k].propensity = fit_propensity(complement, learners.propensity, learners.eps);
        models[k].arm0 = fit_joint(complement, 0, learners.joint);
        models[k].arm1 = fit_joint(complement, 1, learners.joint);
    });
    return FoldedNuisances(std::move(fold_of), std::move(models), seed);
}

NuisanceValue ClosedFormNuisance::operator()(std::span<const double> x) const {
    NuisanceValue v;
    v.lambda1 = lambda1(x);
    for (std::size_t j = 0; j < 8; ++j) v.pi.values[j] = pi[j] ? pi[j](x) : 0.0;
    return v;
}

std::vector<NuisanceValue> ClosedFormNuisance::evaluate_all(const Dataset& data, unsigned threads) const {
    std::vector<NuisanceValue> out(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) { out[i] = (*this)(data.row(i)); });
    return out;
}

double logit(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw Error(ErrorCode::out_of_range, "logit is undefined at " + std::to_string(p));
    return std::log(p / (1.0 - p));
}

double expit(double v) noexcept {
    return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

ClosedFormNuisance oracle_noisy_nuisance(const ClosedFormNuisance& truth, std::size_t n, double r, double h,
                                         std::uint64_t seed) {
    if (!(r > 0.0 && r <= 0.5)) throw Error(ErrorCode::invalid_argument, "rate r must lie in (0, 0.5]");
    if (!(h >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise scale h must be nonnegative");
    if (n == 0) throw Error(ErrorCode::invalid_argument, "sample size must be positive");
    if (!truth.lambda1) throw Error(ErrorCode::invalid_argument, "truth must provide lambda1");
    if (h == 0.0) return truth;

    const double scale = h * std::pow(static_cast<double>(n), -r);
    RandomStream rng(seed, stream_id({tags::nuisance_noise}));
    auto perturb = [&](const ClosedFormNuisance::Function& f) -> ClosedFormNuisance::Function {
        const double shift = scale * (1.0 + rng.normal());
        return [f, shift](std::span<const double> x) { return expit(logit(f(x)) + shift); };
    };
    ClosedFormNuisance noisy;
    noisy.lambda1 = perturb(truth.lambda1);
    for (std::size_t j = 0; j < 8; ++j)
        if (truth.pi[j]) noisy.pi[j] = perturb(truth.pi[j]);
    return noisy;
}

}  // namespace ivb
