#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cliniqa/truncation.hpp"

namespace cliniqa {

namespace {

constexpr double kShapeZeroTol = 1e-9;
constexpr double kShapeLowerBound = -0.95; // below this the likelihood is unbounded
constexpr double kShapeUpperBound = 5.0;

struct PwmEstimate {
    double shape;
    double scale;
};

// Hosking & Wallis probability-weighted moments. With a0 = E[X] and
// a1 = E[X (1-F(X))], shape = (1 - 4r) / (1 - 2r) and scale = a0 (1 - shape)
// where r = a1 / a0.
PwmEstimate pwm_fit(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    double a0 = 0.0;
    double a1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        a0 += x[i];
        a1 += x[i] * static_cast<double>(n - 1 - i) / static_cast<double>(n - 1);
    }
    a0 /= static_cast<double>(n);
    a1 /= static_cast<double>(n);
    const double r = a1 / a0;
    const double denom = 1.0 - 2.0 * r;
    if (std::abs(denom) < 1e-12) throw GpdFitError("degenerate excesses: moment fit undefined");
    const double shape = (1.0 - 4.0 * r) / denom;
    const double scale = a0 * (1.0 - shape);
    if (!(scale > 0.0) || !std::isfinite(shape))
        throw GpdFitError("moment fit produced invalid parameters");
    return {shape, scale};
}

// Profile log-likelihood in theta = shape/scale. For a valid theta,
// shape(theta) = mean(log(1 + theta x)) and scale = shape/theta; the profile
// value is -n (log(scale) + shape + 1). theta = 0 is the exponential limit.
double profile_loglik(double theta, std::span<const double> x) {
    const auto n = static_cast<double>(x.size());
    if (theta == 0.0) {
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= n;
        return -n * (std::log(mean) + 1.0);
    }
    double sum_log = 0.0;
    for (double v : x) {
        const double t = 1.0 + theta * v;
        if (t <= 0.0) return -std::numeric_limits<double>::infinity();
        sum_log += std::log(t);
    }
    const double shape = sum_log / n;
    const double scale = shape / theta;
    if (!(scale > 0.0)) return -std::numeric_limits<double>::infinity();
    if (shape < kShapeLowerBound || shape > kShapeUpperBound)
        return -std::numeric_limits<double>::infinity();
    return -n * (std::log(scale) + shape + 1.0);
}

GpdParams params_at(double theta, std::span<const double> x) {
    GpdParams p;
    p.n_tail = x.size();
    if (theta == 0.0) {
        double mean = 0.0;
        for (double v : x) mean += v;
        p.shape = 0.0;
        p.scale = mean / static_cast<double>(x.size());
        return p;
    }
    double sum_log = 0.0;
    for (double v : x) sum_log += std::log1p(theta * v);
    p.shape = sum_log / static_cast<double>(x.size());
    p.scale = p.shape / theta;
    return p;
}

} // namespace

GpdParams gpd_fit(std::span<const double> excesses) {
    if (excesses.size() < 2) throw GpdFitError("need at least 2 excesses");
    double xmin = excesses.front(), xmax = excesses.front();
    for (double v : excesses) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw GpdFitError("excesses must be positive and finite");
        xmin = std::min(xmin, v);
        xmax = std::max(xmax, v);
    }
    if (xmin == xmax) throw GpdFitError("degenerate excesses: all values identical");

    std::vector<double> x(excesses.begin(), excesses.end());
    const PwmEstimate pwm = pwm_fit(x);

    GpdParams best;
    best.shape = pwm.shape;
    best.scale = pwm.scale;
    best.n_tail = x.size();

    // Maximum-likelihood refinement over theta = shape/scale, accepted only
    // when the interior optimum beats the moment estimate.
    const double theta_pwm = pwm.shape / pwm.scale;
    const double theta_floor = -(1.0 - 1e-10) / xmax;
    const double span = std::max(std::abs(theta_pwm), 1.0 / xmax);

    double best_theta = theta_pwm;
    double best_ll = profile_loglik(theta_pwm, x);
    const double pwm_ll = best_ll;
    for (int i = -60; i <= 60; ++i) {
        const double theta = std::max(theta_pwm + span * 0.1 * i, theta_floor + 1e-12);
        const double ll = profile_loglik(theta, x);
        if (ll > best_ll) {
            best_ll = ll;
            best_theta = theta;
        }
    }
    // Golden-section polish around the best grid point.
    double lo = std::max(best_theta - span * 0.1, theta_floor + 1e-12);
    double hi = best_theta + span * 0.1;
    constexpr double kGolden = 0.6180339887498949;
    for (int iter = 0; iter < 100 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++iter) {
        const double c = hi - kGolden * (hi - lo);
        const double d = lo + kGolden * (hi - lo);
        if (profile_loglik(c, x) >= profile_loglik(d, x)) {
            hi = d;
        } else {
            lo = c;
        }
    }
    const double theta_mle = 0.5 * (lo + hi);
    const double mle_ll = profile_loglik(theta_mle, x);
    if (std::isfinite(mle_ll) && mle_ll >= pwm_ll) {
        const GpdParams refined = params_at(theta_mle, x);
        // a shape pinned against the search bounds means the likelihood is
        // running away (the xi < -1 pathology); treat as non-convergence
        constexpr double kBoundMargin = 0.02;
        if (refined.scale > 0.0 && refined.shape > kShapeLowerBound + kBoundMargin &&
            refined.shape < kShapeUpperBound - kBoundMargin) {
            best.shape = refined.shape;
            best.scale = refined.scale;
        }
    }
    return best;
}

double gpd_survival(double excess, const GpdParams& params) {
    if (excess < 0.0) throw TruncationError("gpd_survival: negative excess");
    if (std::abs(params.shape) < kShapeZeroTol) return std::exp(-excess / params.scale);
    const double t = 1.0 + params.shape * excess / params.scale;
    if (t <= 0.0) return 0.0; // past the support end for shape < 0
    return std::pow(t, -1.0 / params.shape);
}

} // namespace cliniqa
