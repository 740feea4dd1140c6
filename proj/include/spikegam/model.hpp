#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>

namespace spikegam {

enum class ResponseType { Gaussian, Bernoulli };

std::string_view to_string(ResponseType type);
ResponseType parse_response_type(std::string_view name);

// Prior hyperparameters. Defaults are the recommended non-informative
// settings for standardized data.
struct Hyperparameters {
    double sigma_beta0 = 1e5;  // sd of the intercept prior
    double s_beta = 1000.0;    // Half-Cauchy scale for the Laplace scale of linear terms
    double s_eps = 1000.0;     // Half-Cauchy scale for the error sd
    double s_u = 1000.0;       // Half-Cauchy scale for the spline-coefficient scale
    double rho_beta = 0.5;     // prior inclusion probability of a linear term
    double rho_u = 0.5;        // prior inclusion probability of a spline block

    // Throws InvalidParameter unless scales are positive and rhos lie in [0,1].
    void validate() const;
};

// Posterior (or variational) means of the inclusion indicators: one entry
// per X column for the linear terms, one per spline block.
struct InclusionProbabilities {
    Eigen::VectorXd beta;
    Eigen::VectorXd u;
};

}  // namespace spikegam
