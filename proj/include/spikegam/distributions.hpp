#pragma once

#include <Eigen/Dense>

#include <span>

#include "spikegam/rng.hpp"

namespace spikegam {

// Parameter records for the sampled families. Every constructor validates
// and throws InvalidParameter on out-of-domain values.

struct BernoulliParams {
    explicit BernoulliParams(double p);
    double p;
};

// Inverse-Gamma with density lambda^kappa x^(-kappa-1) exp(-lambda/x) / Gamma(kappa).
// NOTE: lambda is a RATE on 1/x (equivalently a scale on x). The reciprocal
// of a draw is Gamma(shape kappa, rate lambda). Mean lambda/(kappa-1), kappa > 1.
struct InverseGammaParams {
    InverseGammaParams(double shape, double rate);
    double shape;
    double rate;
};

// Inverse-Gaussian with mean mu and shape lambda; variance mu^3/lambda.
struct InverseGaussianParams {
    InverseGaussianParams(double mean, double shape);
    double mean;
    double shape;
};

// N(location, variance) conditioned on being positive.
struct TruncNormalPlusParams {
    explicit TruncNormalPlusParams(double location, double variance = 1.0);
    double location;
    double variance;
};

double sample_inverse_gamma(double shape, double rate, RngStream& rng);
double sample(const InverseGammaParams& params, RngStream& rng);

// Michael, Schucany & Haas transformation with multiple roots, written in a
// cancellation-free form so that very large means (up to ~1e12) stay accurate.
double sample_inverse_gaussian(double mean, double shape, RngStream& rng);
double sample(const InverseGaussianParams& params, RngStream& rng);

// Unit-variance positive truncated normal. Plain rejection from N(mu, 1) when
// the acceptance rate is high; Robert's translated-exponential proposal when
// mu is negative, so the expected number of iterations stays bounded for any mu.
double sample_truncated_normal_plus(double location, RngStream& rng);
double sample(const TruncNormalPlusParams& params, RngStream& rng);

int sample_bernoulli(double p, RngStream& rng);
int sample(const BernoulliParams& params, RngStream& rng);

Eigen::VectorXd sample_std_normal_vec(Eigen::Index length, RngStream& rng);

// phi(x)/Phi(x), accurate on the whole real line.
double zeta_prime(double x);
Eigen::VectorXd zeta_prime(const Eigen::Ref<const Eigen::VectorXd>& x);

// log Phi(x) without underflow for large negative x.
double log_norm_cdf(double x);
double norm_cdf(double x);

// log(p / (1 - p)); p = 0 and p = 1 map to -inf and +inf.
double logit(double p);
// 1 / (1 + exp(-x)); saturates to exactly 0 or 1 at the extremes.
double expit(double x);

}  // namespace spikegam
