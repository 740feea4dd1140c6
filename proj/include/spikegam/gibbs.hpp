#pragma once

#include <Eigen/Dense>

#include <vector>

#include "spikegam/model.hpp"
#include "spikegam/preprocess.hpp"
#include "spikegam/rng.hpp"

namespace spikegam {

struct GibbsOptions {
    int n_warm = 1000;
    int n_kept = 1000;
    bool keep_c = false;  // store the Albert-Chib chain (N_kept x n), binary only
};

// One full set of model unknowns. Indicators are stored as doubles because
// the initial state sets them to 1/2.
struct GibbsState {
    double beta0 = 0.0;
    Eigen::VectorXd gamma_beta;
    Eigen::VectorXd beta_tilde;
    Eigen::VectorXd b_beta;
    double sigma2_beta = 1.0;
    double a_beta = 1.0;
    Eigen::VectorXd gamma_u;   // per block
    Eigen::VectorXd u_tilde;   // all blocks stacked, indexed by block_index
    Eigen::VectorXd b_u;
    Eigen::VectorXd sigma2_u;
    Eigen::VectorXd a_u;
    double sigma2_eps = 1.0;
    double a_eps = 1.0;
    Eigen::VectorXd c;  // binary only
};

struct GibbsTiming {
    double total_seconds = 0.0;
    double response_seconds = 0.0;  // residual / Albert-Chib steps, the only ones touching rows
};

// Retained chains, one row per kept sweep.
struct GibbsSamples {
    ResponseType response = ResponseType::Gaussian;
    std::vector<Eigen::Index> block_index;

    Eigen::VectorXd beta0;
    Eigen::MatrixXi gamma_beta;
    Eigen::MatrixXd beta_tilde;
    Eigen::MatrixXd beta;  // gamma_beta .* beta_tilde
    Eigen::MatrixXd b_beta;
    Eigen::VectorXd sigma2_beta;
    Eigen::VectorXd a_beta;
    Eigen::MatrixXi gamma_u;
    Eigen::MatrixXd u_tilde;
    Eigen::MatrixXd u;  // gamma_u(j) * u_tilde block j
    Eigen::MatrixXd b_u;
    Eigen::MatrixXd sigma2_u;
    Eigen::MatrixXd a_u;
    Eigen::VectorXd sigma2_eps;  // empty for binary responses
    Eigen::VectorXd a_eps;       // empty for binary responses
    Eigen::MatrixXd c;           // empty unless GibbsOptions::keep_c

    GibbsState last;
    GibbsTiming timing;

    Eigen::Index n_kept() const { return beta0.size(); }
};

// Draw from N(Omega^-1 rhs / scale, Omega^-1) through the eigendecomposition
// of Omega. Throws NumericalFailure unless every eigenvalue is positive.
Eigen::VectorXd draw_mvn_via_eigen(const Eigen::MatrixXd& omega, const Eigen::VectorXd& rhs, double scale,
                                   RngStream& rng);

GibbsSamples run_gibbs(const PreparedData& data, const Hyperparameters& hyper, const GibbsOptions& options,
                       RngStream& rng);

InclusionProbabilities posterior_inclusion_means(const GibbsSamples& samples);

}  // namespace spikegam
