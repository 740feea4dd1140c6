#pragma once

#include <Eigen/Dense>

#include <vector>

#include "spikegam/model.hpp"
#include "spikegam/preprocess.hpp"

namespace spikegam {

// Inverse-Gamma(kappa, lambda) q-density together with E_q(1/x) = kappa/lambda.
struct InvGammaQ {
    double kappa = 1.0;
    double lambda = 1.0;
    double mu_recip = 1.0;

    void set_lambda(double value) {
        lambda = value;
        mu_recip = kappa / lambda;
    }
};

// Variational parameters. Spline quantities are stacked over blocks using
// block_index; per-block scalars are vectors of length num_blocks.
struct QParams {
    ResponseType response = ResponseType::Gaussian;
    std::vector<Eigen::Index> block_index;

    double mu_beta0 = 0.0;
    double sigma2_beta0 = 1.0;

    Eigen::VectorXd mu_gamma_beta;
    Eigen::MatrixXd omega_gamma_beta;  // E_q(gamma gamma^T)
    Eigen::VectorXd mu_beta_tilde;
    Eigen::MatrixXd sigma_beta_tilde;
    Eigen::VectorXd mu_b_beta;
    InvGammaQ sigma2_beta;
    InvGammaQ a_beta;

    Eigen::VectorXd mu_u_tilde;
    Eigen::VectorXd sigma2_u_tilde;  // diagonal covariance
    Eigen::VectorXd mu_gamma_u;
    Eigen::VectorXd mu_b_u;
    std::vector<InvGammaQ> sigma2_u;
    std::vector<InvGammaQ> a_u;

    // Gaussian responses.
    InvGammaQ sigma2_eps;
    InvGammaQ a_eps;
    double mu_recip_sigma2_eps = 1.0;  // fixed at 1 for binary responses

    // Binary responses: q(c_i) is N(c_location_i, 1) truncated to the side
    // given by y_i; mu_c is its mean.
    Eigen::VectorXd mu_c;
    Eigen::VectorXd c_location;

    int num_blocks() const { return static_cast<int>(mu_gamma_u.size()); }
    // E_q(gamma .* beta_tilde) and E_q(gamma_u u_tilde).
    Eigen::VectorXd mean_beta() const { return mu_gamma_beta.cwiseProduct(mu_beta_tilde); }
    Eigen::VectorXd mean_u() const;
};

struct ElboTrace {
    std::vector<double> values;           // one per cycle
    std::vector<double> relative_change;  // |L_t - L_{t-1}| / (1 + |L_t|), from the second cycle
};

struct MfvbOptions {
    double tol = 1e-8;
    int max_cycles = 500;
    // Throw ConsistencyError when a cycle lowers the objective by more than
    // this relative amount.
    double decrease_slack = 1e-10;
};

struct MfvbResult {
    QParams q;
    ElboTrace trace;
    bool converged = false;
    int cycles = 0;
    double seconds = 0.0;
};

// The initial values of the coordinate-ascent scheme.
QParams initial_qparams(const PreparedData& data);

MfvbResult run_mfvb(const PreparedData& data, const Hyperparameters& hyper, const MfvbOptions& options = {});

// Evidence lower bound log p(y; q), all constants included.
double compute_elbo(const QParams& q, const PreparedData& data, const Hyperparameters& hyper);

// p log p + (1 - p) log(1 - p), taken as 0 at p = 0 and p = 1.
double bernoulli_xlogx(double p);

// Sum over observations of Var_q(eta_i) for the linear predictor eta.
double trace_var_eta(const QParams& q, const PreparedData& data);

InclusionProbabilities variational_inclusion_means(const QParams& q);

}  // namespace spikegam
