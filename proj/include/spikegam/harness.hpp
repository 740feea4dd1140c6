#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "spikegam/gibbs.hpp"
#include "spikegam/mfvb.hpp"
#include "spikegam/preprocess.hpp"
#include "spikegam/rng.hpp"
#include "spikegam/selection.hpp"

namespace spikegam {

// Synthetic additive model with i.i.d. N(0,1) predictors, all offered as
// continuous candidates in the order zero, linear, nonlinear.
struct SyntheticSpec {
    int n = 1000;
    int d_zero = 5;
    int d_lin = 5;
    int d_nonlin = 5;
    double sigma_eps = 1.0;  // Gaussian responses only
    ResponseType response = ResponseType::Gaussian;
    double linear_scale = 1.0;     // linear coefficients are N(0, linear_scale^2)
    double nonlinear_scale = 1.0;  // sd of each nonlinear effect under N(0,1) input
    double intercept = 0.0;

    int d() const { return d_zero + d_lin + d_nonlin; }
    void validate() const;
};

struct SyntheticTruth {
    std::vector<EffectType> labels;
    std::vector<double> linear;                  // per predictor, 0 unless Linear
    std::vector<std::array<double, 6>> quintic;  // coefficients of He_0..He_5, 0 unless Nonlinear
    double intercept = 0.0;

    // Linear predictor f_true for rows of x (observations x predictors).
    Eigen::VectorXd eval(const Eigen::MatrixXd& x) const;
};

struct SyntheticData {
    RawDataset data;
    SyntheticTruth truth;
    Eigen::MatrixXd x;  // predictors, observations x predictors
};

SyntheticData gen_synthetic(const SyntheticSpec& spec, RngStream& rng);

// Probabilists' Hermite polynomial He_k.
double hermite(int k, double x);

double misclassification_rate(const std::vector<EffectType>& truth, const std::vector<EffectType>& estimated);

// Estimated types in RawDataset order (x_linear columns, then x_nonlinear).
std::vector<EffectType> types_in_input_order(const SelectionResult& result, const PreparedData& data);

double misclassification_rate(const std::vector<EffectType>& truth, const SelectionResult& result,
                              const PreparedData& data);

// Point estimates of the standardized-scale coefficients.
struct CoefficientMeans {
    double beta0 = 0.0;
    Eigen::VectorXd beta;
    Eigen::VectorXd u;
};

CoefficientMeans coefficient_means(const GibbsSamples& fit);
CoefficientMeans coefficient_means(const QParams& fit);

// Estimated linear predictor at new points; x_linear and x_nonlinear hold
// the RawDataset columns of the new observations. Gaussian fits return the
// response scale. Points beyond a training range are clamped for the
// spline part.
Eigen::VectorXd predict(const PreparedData& data, const CoefficientMeans& means, const Eigen::MatrixXd& x_linear,
                        const Eigen::MatrixXd& x_nonlinear);

using Regression = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

// (E{f_true(x) - f_hat(x)}^2 + sigma_eps^2) / sigma_eps^2 over n_draws fresh
// N(0,1) predictor vectors of dimension d.
double relative_test_error(const Regression& f_hat, const SyntheticTruth& truth, double sigma_eps, int d,
                           int n_draws, RngStream& rng);

// Least-squares slope of log t against log n.
double loglog_slope(const std::vector<double>& n, const std::vector<double>& t);

// One cell of a simulation study.
struct SimulationCell {
    SyntheticSpec spec;
    FitMethod method = FitMethod::Mcmc;
    std::vector<double> taus{0.5};
    Hyperparameters hyper;
    GibbsOptions gibbs;
    MfvbOptions mfvb;
    int num_basis = 30;
    int test_draws = 0;  // relative test error draws; 0 skips it
};

struct ReplicationRecord {
    int replication = 0;
    std::vector<double> misclassification;  // per tau
    double relative_test_error = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;                   // wall clock of the fit call alone
    bool converged = true;
    int cycles = 0;                         // MFVB only
};

// Data for replication r depend only on (master seed, r, spec), so different
// methods and settings see the same data sets.
ReplicationRecord run_replication(const SimulationCell& cell, std::uint64_t master_seed, int replication);

std::vector<ReplicationRecord> run_cell(const SimulationCell& cell, std::uint64_t master_seed, int replications,
                                        int workers = 1);

double median(std::vector<double> values);

}  // namespace spikegam
