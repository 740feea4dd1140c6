#include "spikegam/selection.hpp"

#include <algorithm>
#include <cmath>

#include "spikegam/distributions.hpp"
#include "spikegam/errors.hpp"

namespace spikegam {

namespace {

constexpr double kZ975 = 1.959963984540054;

// Converts a standardized-scale coefficient to original units.
double coefficient_factor(const PreparedData& data, Eigen::Index column) {
    const double ys = data.response == ResponseType::Gaussian ? data.y_scale.sd : 1.0;
    return ys / data.x_scale[column].sd;
}

double to_response_scale(const PreparedData& data, double eta) {
    return data.response == ResponseType::Gaussian ? data.y_scale.inverse(eta) : norm_cdf(eta);
}

void check_columns(const PreparedData& data, const std::vector<Eigen::Index>& columns) {
    for (Eigen::Index c : columns)
        if (c < 0 || c >= data.d()) throw InvalidIndex("coefficient column " + std::to_string(c) + " out of range");
}

// Everything the slice needs from the data; fit-independent.
struct SliceDesign {
    Eigen::Index column = 0;
    Eigen::Index start = 0;
    Eigen::Index size = 0;
    Eigen::VectorXd grid_std;
    Eigen::VectorXd grid_orig;
    Eigen::MatrixXd z_grid;
    // Other selected predictors at their medians.
    std::vector<Eigen::Index> other_columns;
    std::vector<double> other_medians;
    std::vector<int> other_blocks;           // -1 when only the linear part enters
    std::vector<Eigen::RowVectorXd> other_z;  // spline row at the median
};

SliceDesign slice_design(const PreparedData& data, int block, const std::vector<PredictorDecision>& decisions,
                         const Eigen::VectorXd& grid, int grid_size) {
    SliceDesign s;
    s.column = data.block_column(block);
    s.start = data.block_start(block);
    s.size = data.block_size(block);
    const BasisFactorization& basis = data.bases[block];
    const double lo = basis.knots.lower, hi = basis.knots.upper;
    const AffineScale& scale = data.x_scale[s.column];
    if (grid.size() == 0) {
        if (grid_size < 2) throw InvalidParameter("curve grid needs at least 2 points");
        s.grid_std = Eigen::VectorXd::LinSpaced(grid_size, lo, hi);
        s.grid_orig = s.grid_std.unaryExpr([&](double v) { return scale.inverse(v); });
    } else {
        s.grid_orig = grid;
        s.grid_std.resize(grid.size());
        const double slack = 1e-9 * (hi - lo);
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            const double v = scale.forward(grid[i]);
            if (!(v >= lo - slack && v <= hi + slack))
                throw OutOfRange("grid point " + std::to_string(grid[i]) + " lies outside the training range of " +
                                 data.names[s.column]);
            s.grid_std[i] = std::clamp(v, lo, hi);
        }
    }
    s.z_grid = evaluate_on_grid(std::span<const double>(s.grid_std.data(), s.grid_std.size()), basis);

    for (const PredictorDecision& dec : decisions) {
        if (dec.type == EffectType::Zero || dec.column == s.column) continue;
        const Eigen::VectorXd col = data.X.col(dec.column);
        const double med = sample_quantile(std::vector<double>(col.data(), col.data() + col.size()), 0.5);
        s.other_columns.push_back(dec.column);
        s.other_medians.push_back(med);
        if (dec.type == EffectType::Nonlinear && dec.block >= 0) {
            s.other_blocks.push_back(dec.block);
            const double pt = std::clamp(med, data.bases[dec.block].knots.lower, data.bases[dec.block].knots.upper);
            s.other_z.push_back(evaluate_on_grid(std::span<const double>(&pt, 1), data.bases[dec.block]).row(0));
        } else {
            s.other_blocks.push_back(-1);
            s.other_z.emplace_back();
        }
    }
    return s;
}

CurveSlice empty_slice(const PreparedData& data, int block, const SliceDesign& s) {
    CurveSlice out;
    out.name = data.names[s.column];
    out.block = block;
    out.grid = s.grid_orig;
    out.estimate.resize(s.grid_std.size());
    out.lower.resize(s.grid_std.size());
    out.upper.resize(s.grid_std.size());
    return out;
}

void check_block(const PreparedData& data, int block) {
    if (block < 0 || block >= data.num_blocks())
        throw InvalidIndex("spline block " + std::to_string(block) + " out of range");
}

}  // namespace

std::string to_string(EffectType type) {
    switch (type) {
        case EffectType::Zero: return "zero";
        case EffectType::Linear: return "linear";
        case EffectType::Nonlinear: return "nonlinear";
    }
    return "unknown";
}

std::string to_string(FitMethod method) { return method == FitMethod::Mcmc ? "mcmc" : "mfvb"; }

FitMethod parse_fit_method(const std::string& name) {
    if (name == "mcmc") return FitMethod::Mcmc;
    if (name == "mfvb") return FitMethod::Mfvb;
    throw InvalidParameter("unknown method '" + name + "' (expected mcmc or mfvb)");
}

SelectionConfig SelectionConfig::defaults(FitMethod method) {
    SelectionConfig c;
    c.tau = method == FitMethod::Mcmc ? default_mcmc : default_mfvb;
    return c;
}

void SelectionConfig::validate() const {
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidParameter("tau must lie in (0,1)");
    if (grid_size < 2) throw InvalidParameter("curve grid needs at least 2 points");
}

EffectType classify(double p_beta, std::optional<double> p_u, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidParameter("tau must lie in (0,1)");
    if (!(p_beta >= 0.0 && p_beta <= 1.0) || (p_u && !(*p_u >= 0.0 && *p_u <= 1.0)))
        throw InvalidParameter("inclusion probabilities must lie in [0,1]");
    const double cut = 1.0 - tau;
    if (!p_u) return p_beta > cut ? EffectType::Linear : EffectType::Zero;
    if (p_beta <= cut && *p_u <= cut) return EffectType::Zero;
    if (p_beta > cut && *p_u <= cut) return EffectType::Linear;
    return EffectType::Nonlinear;
}

std::vector<PredictorDecision> select_effects(const PreparedData& data, const InclusionProbabilities& p, double tau) {
    if (p.beta.size() != data.d() || p.u.size() != data.num_blocks())
        throw InvalidInput("inclusion probabilities do not match the data");
    std::vector<PredictorDecision> out;
    for (Eigen::Index c = 0; c < data.d(); ++c) {
        PredictorDecision dec;
        dec.name = data.names[c];
        dec.column = c;
        dec.p_beta = p.beta[c];
        if (c >= data.num_linear_only) {
            dec.block = static_cast<int>(c - data.num_linear_only);
            dec.p_u = p.u[dec.block];
        }
        dec.type = classify(dec.p_beta, dec.p_u, tau);
        out.push_back(dec);
    }
    return out;
}

double sample_quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw InvalidInput("quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw InvalidParameter("quantile probability must lie in [0,1]");
    const double h = prob * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    std::nth_element(values.begin(), values.begin() + lo, values.end());
    const double a = values[lo];
    if (lo + 1 >= values.size()) return a;
    const double b = *std::min_element(values.begin() + lo + 1, values.end());
    return a + (h - static_cast<double>(lo)) * (b - a);
}

std::vector<CoefficientSummary> summarize_linear(const GibbsSamples& fit, const PreparedData& data,
                                                 const std::vector<Eigen::Index>& columns) {
    if (fit.n_kept() < 1) throw InvalidInput("empty chain");
    check_columns(data, columns);
    std::vector<CoefficientSummary> out;
    for (Eigen::Index c : columns) {
        const double f = coefficient_factor(data, c);
        std::vector<double> draws(fit.n_kept());
        for (int s = 0; s < fit.n_kept(); ++s) draws[s] = f * fit.beta(s, c);
        double mean = 0.0;
        for (double v : draws) mean += v;
        mean /= static_cast<double>(draws.size());
        out.push_back({data.names[c], c, mean, sample_quantile(draws, 0.025), sample_quantile(draws, 0.975)});
    }
    return out;
}

std::vector<CoefficientSummary> summarize_linear(const QParams& fit, const PreparedData& data,
                                                 const std::vector<Eigen::Index>& columns) {
    check_columns(data, columns);
    if (fit.mu_gamma_beta.size() != data.d()) throw InvalidInput("q-parameters do not match the data");
    std::vector<CoefficientSummary> out;
    for (Eigen::Index c : columns) {
        const double f = coefficient_factor(data, c);
        const double g = fit.mu_gamma_beta[c], m = fit.mu_beta_tilde[c];
        const double sd = std::sqrt(g * (fit.sigma_beta_tilde(c, c) + (1.0 - g) * m * m));
        const double mean = f * g * m;
        out.push_back({data.names[c], c, mean, mean - kZ975 * std::abs(f) * sd, mean + kZ975 * std::abs(f) * sd});
    }
    return out;
}

CurveSlice curve_slice(const GibbsSamples& fit, const PreparedData& data, int block,
                       const std::vector<PredictorDecision>& decisions, const Eigen::VectorXd& grid, int grid_size) {
    if (fit.n_kept() < 1) throw InvalidInput("empty chain");
    check_block(data, block);
    const SliceDesign s = slice_design(data, block, decisions, grid, grid_size);
    const int nk = fit.n_kept();

    Eigen::VectorXd offset = fit.beta0;
    for (std::size_t k = 0; k < s.other_columns.size(); ++k) {
        offset += s.other_medians[k] * fit.beta.col(s.other_columns[k]);
        if (s.other_blocks[k] >= 0) {
            const int b = s.other_blocks[k];
            offset += fit.u.middleCols(data.block_start(b), data.block_size(b)) * s.other_z[k].transpose();
        }
    }
    // Linear predictor slice, one column per retained sample.
    Eigen::MatrixXd eta = s.grid_std * fit.beta.col(s.column).transpose();
    eta.noalias() += s.z_grid * fit.u.middleCols(s.start, s.size).transpose();
    eta.rowwise() += offset.transpose();

    CurveSlice out = empty_slice(data, block, s);
    std::vector<double> row(nk);
    for (Eigen::Index g = 0; g < eta.rows(); ++g) {
        double sum = 0.0;
        for (int t = 0; t < nk; ++t) {
            row[t] = to_response_scale(data, eta(g, t));
            sum += row[t];
        }
        out.estimate[g] = sum / nk;
        out.lower[g] = sample_quantile(row, 0.025);
        out.upper[g] = sample_quantile(row, 0.975);
    }
    return out;
}

CurveSlice curve_slice(const QParams& fit, const PreparedData& data, int block,
                       const std::vector<PredictorDecision>& decisions, const Eigen::VectorXd& grid, int grid_size) {
    check_block(data, block);
    if (fit.mu_gamma_u.size() != data.num_blocks()) throw InvalidInput("q-parameters do not match the data");
    const SliceDesign s = slice_design(data, block, decisions, grid, grid_size);
    const Eigen::VectorXd mb = fit.mean_beta();
    const Eigen::VectorXd mu = fit.mean_u();
    // Variances of the products gamma * coefficient under the factorized q.
    Eigen::VectorXd var_beta(data.d());
    for (Eigen::Index c = 0; c < data.d(); ++c) {
        const double g = fit.mu_gamma_beta[c], m = fit.mu_beta_tilde[c];
        var_beta[c] = g * (fit.sigma_beta_tilde(c, c) + (1.0 - g) * m * m);
    }
    Eigen::VectorXd var_u(data.total_basis());
    for (int b = 0; b < data.num_blocks(); ++b) {
        const Eigen::Index st = data.block_start(b), k = data.block_size(b);
        const double g = fit.mu_gamma_u[b];
        var_u.segment(st, k) = g * (fit.sigma2_u_tilde.segment(st, k).array() +
                                    (1.0 - g) * fit.mu_u_tilde.segment(st, k).array().square());
    }

    double offset = fit.mu_beta0, offset_var = fit.sigma2_beta0;
    for (std::size_t k = 0; k < s.other_columns.size(); ++k) {
        const Eigen::Index c = s.other_columns[k];
        offset += s.other_medians[k] * mb[c];
        offset_var += s.other_medians[k] * s.other_medians[k] * var_beta[c];
        if (s.other_blocks[k] >= 0) {
            const int b = s.other_blocks[k];
            const Eigen::Index st = data.block_start(b), kb = data.block_size(b);
            offset += s.other_z[k].dot(mu.segment(st, kb));
            offset_var += s.other_z[k].array().square().matrix().dot(var_u.segment(st, kb));
        }
    }
    const Eigen::VectorXd eta =
        (s.grid_std * mb[s.column] + s.z_grid * mu.segment(s.start, s.size)).array() + offset;
    const Eigen::VectorXd var = (s.grid_std.array().square() * var_beta[s.column]).matrix() +
                                s.z_grid.array().square().matrix() * var_u.segment(s.start, s.size) +
                                Eigen::VectorXd::Constant(eta.size(), offset_var);

    CurveSlice out = empty_slice(data, block, s);
    for (Eigen::Index g = 0; g < eta.size(); ++g) {
        const double half = kZ975 * std::sqrt(var[g]);
        // Endpoints map through the monotone response transform.
        out.estimate[g] = to_response_scale(data, eta[g]);
        out.lower[g] = to_response_scale(data, eta[g] - half);
        out.upper[g] = to_response_scale(data, eta[g] + half);
    }
    return out;
}

namespace {

template <class Fit>
SelectionResult summarize_impl(const Fit& fit, const PreparedData& data, const SelectionConfig& config,
                               const InclusionProbabilities& p, FitMethod method) {
    config.validate();
    SelectionResult out;
    out.method = method;
    out.tau = config.tau;
    out.predictors = select_effects(data, p, config.tau);
    std::vector<Eigen::Index> linear;
    for (const PredictorDecision& dec : out.predictors)
        if (dec.type == EffectType::Linear) linear.push_back(dec.column);
    out.coefficients = summarize_linear(fit, data, linear);
    for (const PredictorDecision& dec : out.predictors)
        if (dec.type == EffectType::Nonlinear)
            out.curves.push_back(curve_slice(fit, data, dec.block, out.predictors, {}, config.grid_size));
    return out;
}

}  // namespace

SelectionResult summarize(const GibbsSamples& fit, const PreparedData& data, const SelectionConfig& config) {
    return summarize_impl(fit, data, config, posterior_inclusion_means(fit), FitMethod::Mcmc);
}

SelectionResult summarize(const QParams& fit, const PreparedData& data, const SelectionConfig& config) {
    return summarize_impl(fit, data, config, variational_inclusion_means(fit), FitMethod::Mfvb);
}

SelectionOverlap compare_selections(const SelectionResult& a, const SelectionResult& b) {
    if (a.predictors.size() != b.predictors.size()) throw InvalidInput("selections cover different predictors");
    SelectionOverlap o;
    o.num_predictors = static_cast<int>(a.predictors.size());
    for (std::size_t i = 0; i < a.predictors.size(); ++i) {
        const EffectType x = a.predictors[i].type, y = b.predictors[i].type;
        if (x == y) ++o.same_type;
        if (x != EffectType::Zero) ++o.selected_first;
        if (y != EffectType::Zero) ++o.selected_second;
        if (x != EffectType::Zero && y != EffectType::Zero) ++o.selected_both;
    }
    return o;
}

}  // namespace spikegam
