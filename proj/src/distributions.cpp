#include "spikegam/distributions.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "spikegam/errors.hpp"

namespace spikegam {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Below this point phi/Phi is evaluated from the Mills-ratio continued
// fraction; above it erfc keeps full relative accuracy.
constexpr double kZetaCrossover = -20.0;

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

// 1/R(t) = t + 1/(t + 2/(t + 3/(t + ...))) where R is the Mills ratio.
// Modified Lentz evaluation; for t >= 20 this converges within a few terms.
double inverse_mills_ratio(double t) {
    constexpr double tiny = 1e-300;
    double f = t;
    double c = t;
    double d = 0.0;
    for (int k = 1; k < 500; ++k) {
        d = t + k * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = t + k / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return f;
}

}  // namespace

BernoulliParams::BernoulliParams(double p_) : p(p_) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("Bernoulli probability must lie in [0,1]");
}

InverseGammaParams::InverseGammaParams(double shape_, double rate_) : shape(shape_), rate(rate_) {
    if (!positive_finite(shape) || !positive_finite(rate))
        throw InvalidParameter("Inverse-Gamma shape and rate must be positive");
}

InverseGaussianParams::InverseGaussianParams(double mean_, double shape_) : mean(mean_), shape(shape_) {
    if (!positive_finite(mean) || !positive_finite(shape))
        throw InvalidParameter("Inverse-Gaussian mean and shape must be positive");
}

TruncNormalPlusParams::TruncNormalPlusParams(double location_, double variance_)
    : location(location_), variance(variance_) {
    if (!std::isfinite(location)) throw InvalidParameter("truncated-normal location must be finite");
    if (!positive_finite(variance)) throw InvalidParameter("truncated-normal variance must be positive");
}

double sample(const InverseGammaParams& params, RngStream& rng) {
    std::gamma_distribution<double> gamma(params.shape, 1.0);
    const double g = gamma(rng);
    return params.rate / std::max(g, std::numeric_limits<double>::min());
}

double sample_inverse_gamma(double shape, double rate, RngStream& rng) {
    return sample(InverseGammaParams(shape, rate), rng);
}

double sample(const InverseGaussianParams& params, RngStream& rng) {
    const double mu = params.mean;
    const double lambda = params.shape;
    const double nu = rng.normal();
    const double y = nu * nu;
    if (y == 0.0) return mu;
    // Smaller root of the quadratic, rearranged as 4 mu^2 lambda y / (mu y + S)^2
    // with S = sqrt(mu^2 y^2 + 4 mu lambda y).
    const double muy = mu * y;
    const double s = std::sqrt(muy * muy + 4.0 * mu * lambda * y);
    const double denom = muy + s;
    double x = 4.0 * mu * lambda * y / (denom * denom) * mu;
    if (!(x > 0.0)) x = std::numeric_limits<double>::min();
    if (rng.uniform() <= mu / (mu + x)) return x;
    return (mu / x) * mu;
}

double sample_inverse_gaussian(double mean, double shape, RngStream& rng) {
    return sample(InverseGaussianParams(mean, shape), rng);
}

double sample_truncated_normal_plus(double location, RngStream& rng) {
    if (!std::isfinite(location)) throw InvalidParameter("truncated-normal location must be finite");
    if (location >= 0.0) {
        // Acceptance probability Phi(location) >= 1/2.
        for (;;) {
            const double x = location + rng.normal();
            if (x > 0.0) return x;
        }
    }
    // Robert (1995): the excess over the truncation point l = -location is
    // proposed from Exp(alpha) with the optimal rate. Working with the excess
    // directly keeps the draw strictly positive even when |location| is huge.
    const double l = -location;
    const double root = std::sqrt(l * l + 4.0);
    const double alpha = 0.5 * (l + root);
    const double shift = 2.0 / (root + l);  // alpha - l
    for (;;) {
        const double excess = -std::log(rng.uniform()) / alpha;
        const double r = excess - shift;
        if (rng.uniform() <= std::exp(-0.5 * r * r)) return excess;
    }
}

double sample(const TruncNormalPlusParams& params, RngStream& rng) {
    const double sd = std::sqrt(params.variance);
    return sd * sample_truncated_normal_plus(params.location / sd, rng);
}

int sample(const BernoulliParams& params, RngStream& rng) {
    if (params.p <= 0.0) return 0;
    if (params.p >= 1.0) return 1;
    return rng.uniform() < params.p ? 1 : 0;
}

int sample_bernoulli(double p, RngStream& rng) { return sample(BernoulliParams(p), rng); }

Eigen::VectorXd sample_std_normal_vec(Eigen::Index length, RngStream& rng) {
    if (length < 0) throw InvalidParameter("vector length must be non-negative");
    Eigen::VectorXd z(length);
    for (Eigen::Index i = 0; i < length; ++i) z[i] = rng.normal();
    return z;
}

double zeta_prime(double x) {
    if (std::isnan(x)) return x;
    if (x >= kZetaCrossover) {
        const double phi = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        return phi / (0.5 * std::erfc(-x * kInvSqrt2));
    }
    return inverse_mills_ratio(-x);
}

Eigen::VectorXd zeta_prime(const Eigen::Ref<const Eigen::VectorXd>& x) {
    Eigen::VectorXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = zeta_prime(x[i]);
    return out;
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double log_norm_cdf(double x) {
    if (x > 5.0) return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
    if (x >= kZetaCrossover) return std::log(0.5 * std::erfc(-x * kInvSqrt2));
    return -0.5 * x * x - kLogSqrt2Pi - std::log(zeta_prime(x));
}

double logit(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("logit argument must lie in [0,1]");
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return std::log(p) - std::log1p(-p);
}

double expit(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace spikegam
