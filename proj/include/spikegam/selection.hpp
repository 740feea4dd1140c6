#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "spikegam/gibbs.hpp"
#include "spikegam/mfvb.hpp"
#include "spikegam/preprocess.hpp"

namespace spikegam {

enum class EffectType { Zero, Linear, Nonlinear };

std::string to_string(EffectType type);

enum class FitMethod { Mcmc, Mfvb };

std::string to_string(FitMethod method);
FitMethod parse_fit_method(const std::string& name);

struct SelectionConfig {
    static constexpr double default_mcmc = 0.5;
    static constexpr double default_mfvb = 0.1;

    double tau = default_mcmc;
    int grid_size = 101;  // points per curve slice

    static SelectionConfig defaults(FitMethod method);
    void validate() const;
};

// Zero when no probability exceeds 1 - tau; Linear when only the linear one
// does; Nonlinear otherwise. Linear-only predictors pass no p_u.
EffectType classify(double p_beta, std::optional<double> p_u, double tau);

struct PredictorDecision {
    std::string name;
    Eigen::Index column = 0;  // column of X
    int block = -1;           // spline block, -1 for linear-only predictors
    EffectType type = EffectType::Zero;
    double p_beta = 0.0;
    std::optional<double> p_u;
};

// Original-scale coefficient with a 95% interval.
struct CoefficientSummary {
    std::string name;
    Eigen::Index column = 0;
    double mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

// Pointwise estimate and 95% band on the response scale (probability scale
// for binary responses), over a grid in the predictor's original units.
struct CurveSlice {
    std::string name;
    int block = 0;
    Eigen::VectorXd grid;
    Eigen::VectorXd estimate;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct SelectionResult {
    FitMethod method = FitMethod::Mcmc;
    double tau = 0.5;
    std::vector<PredictorDecision> predictors;
    std::vector<CoefficientSummary> coefficients;  // predictors classified Linear
    std::vector<CurveSlice> curves;                // predictors classified Nonlinear
};

std::vector<PredictorDecision> select_effects(const PreparedData& data, const InclusionProbabilities& p, double tau);

// Equal-tailed quantile with linear interpolation between order statistics.
double sample_quantile(std::vector<double> values, double prob);

std::vector<CoefficientSummary> summarize_linear(const GibbsSamples& fit, const PreparedData& data,
                                                 const std::vector<Eigen::Index>& columns);
std::vector<CoefficientSummary> summarize_linear(const QParams& fit, const PreparedData& data,
                                                 const std::vector<Eigen::Index>& columns);

// Curve for spline block j with every other selected predictor held at its
// sample median. An empty grid means grid_size equally spaced points over
// the training range. Throws OutOfRange for grid points outside that range.
CurveSlice curve_slice(const GibbsSamples& fit, const PreparedData& data, int block,
                       const std::vector<PredictorDecision>& decisions, const Eigen::VectorXd& grid = {},
                       int grid_size = 101);
CurveSlice curve_slice(const QParams& fit, const PreparedData& data, int block,
                       const std::vector<PredictorDecision>& decisions, const Eigen::VectorXd& grid = {},
                       int grid_size = 101);

SelectionResult summarize(const GibbsSamples& fit, const PreparedData& data, const SelectionConfig& config);
SelectionResult summarize(const QParams& fit, const PreparedData& data, const SelectionConfig& config);

struct SelectionOverlap {
    int num_predictors = 0;
    int same_type = 0;        // identical classification
    int selected_first = 0;   // non-Zero in the first result
    int selected_second = 0;
    int selected_both = 0;    // non-Zero in both
};

SelectionOverlap compare_selections(const SelectionResult& a, const SelectionResult& b);

}  // namespace spikegam
