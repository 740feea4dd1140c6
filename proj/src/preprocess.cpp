#include "spikegam/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "spikegam/errors.hpp"

namespace spikegam {

namespace {

std::string column_name(const std::vector<std::string>& names, std::size_t j, const char* prefix) {
    if (j < names.size() && !names[j].empty()) return names[j];
    return prefix + std::to_string(j + 1);
}

std::size_t count_unique(std::span<const double> v) {
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    return static_cast<std::size_t>(std::unique(s.begin(), s.end()) - s.begin());
}

// A^T A through a symmetric rank update, about half the flops of a general product.
Eigen::MatrixXd gram(const Eigen::MatrixXd& a) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(a.cols(), a.cols());
    g.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return g;
}

}  // namespace

void RawDataset::validate(ResponseType response) const {
    const std::size_t rows = n();
    if (rows < 3) throw InvalidInput("at least 3 observations are required");
    for (double v : y)
        if (!std::isfinite(v)) throw InvalidInput("response contains a non-finite value");
    if (response == ResponseType::Bernoulli) {
        for (double v : y)
            if (v != 0.0 && v != 1.0) throw InvalidInput("binary response must contain only 0 and 1");
    } else if (count_unique(y) < 2) {
        throw DegeneratePredictor("response", "response is constant");
    }
    if (x_linear.empty() && x_nonlinear.empty()) throw InvalidInput("no candidate predictors");
    auto check = [&](const std::vector<std::vector<double>>& cols, const std::vector<std::string>& names,
                     const char* prefix) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const std::string name = column_name(names, j, prefix);
            if (cols[j].size() != rows)
                throw InvalidInput("column '" + name + "' has " + std::to_string(cols[j].size()) +
                                   " values, expected " + std::to_string(rows));
            for (double v : cols[j])
                if (!std::isfinite(v)) throw InvalidInput("column '" + name + "' contains a non-finite value");
            if (count_unique(cols[j]) < 2) throw DegeneratePredictor(name, "column is constant");
        }
    };
    check(x_linear, linear_names, "lin");
    check(x_nonlinear, nonlinear_names, "x");
}

Standardized standardize(std::span<const double> v, const std::string& name) {
    const Eigen::Index n = static_cast<Eigen::Index>(v.size());
    if (n < 2) throw DegeneratePredictor(name, "cannot standardize fewer than two values");
    // An aligned copy keeps the reductions independent of where the caller's
    // buffer happens to live, so results are bit-reproducible.
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
    Standardized out;
    out.scale.mean = x.mean();
    const double ss = (x.array() - out.scale.mean).square().sum();
    out.scale.sd = std::sqrt(ss / (n - 1));
    if (!(out.scale.sd > 0.0) || count_unique(v) < 2) throw DegeneratePredictor(name, "column is constant");
    out.values = (x.array() - out.scale.mean) / out.scale.sd;
    return out;
}

Eigen::Index PreparedData::block_start(int j) const {
    if (j < 0 || j >= num_blocks())
        throw InvalidIndex("spline block index " + std::to_string(j) + " out of range [0, " +
                           std::to_string(num_blocks()) + ")");
    return block_index[j];
}

Eigen::Index PreparedData::block_size(int j) const {
    const Eigen::Index start = block_start(j);
    return block_index[j + 1] - start;
}

std::size_t estimate_prepare_bytes(std::size_t n, std::size_t d, std::size_t total_basis) {
    const std::size_t p = d + total_basis;
    // Design matrices, one transient basis build, and the Gram matrices.
    return sizeof(double) * (n * p + n * 64 + p * p + 4 * n);
}

PreparedData prepare(const RawDataset& data, ResponseType response, const PrepareOptions& options) {
    data.validate(response);
    if (options.num_basis < 3) throw InvalidParameter("basis size K must be at least 3");
    if (options.linear_only_threshold < 0) throw InvalidParameter("linear-only threshold must be non-negative");
    const std::size_t n = data.n();

    PreparedData out;
    out.response = response;
    out.n = static_cast<Eigen::Index>(n);

    // Decide which continuous candidates keep a spline block.
    std::vector<std::size_t> spline_cols;
    std::vector<const std::vector<double>*> linear_cols;
    for (std::size_t j = 0; j < data.x_linear.size(); ++j) {
        linear_cols.push_back(&data.x_linear[j]);
        out.names.push_back(column_name(data.linear_names, j, "lin"));
        out.source.push_back({false, j});
    }
    for (std::size_t j = 0; j < data.x_nonlinear.size(); ++j) {
        const std::size_t unique = count_unique(data.x_nonlinear[j]);
        if (unique < static_cast<std::size_t>(options.linear_only_threshold) || unique < 5) {
            linear_cols.push_back(&data.x_nonlinear[j]);
            out.names.push_back(column_name(data.nonlinear_names, j, "x"));
            out.source.push_back({true, j});
            out.demoted.push_back(out.names.back());
        } else {
            spline_cols.push_back(j);
        }
    }
    out.num_linear_only = static_cast<int>(linear_cols.size());
    for (std::size_t j : spline_cols) {
        out.names.push_back(column_name(data.nonlinear_names, j, "x"));
        out.source.push_back({true, j});
    }

    const std::size_t d = linear_cols.size() + spline_cols.size();
    const std::size_t need = estimate_prepare_bytes(n, d, spline_cols.size() * options.num_basis);
    if (need > options.memory_limit_bytes)
        throw CapacityError("estimated memory " + std::to_string(need >> 20) + " MiB exceeds the limit of " +
                            std::to_string(options.memory_limit_bytes >> 20) + " MiB");

    // Response.
    if (response == ResponseType::Gaussian) {
        Standardized sy = standardize(data.y, "response");
        out.y = std::move(sy.values);
        out.y_scale = sy.scale;
    } else {
        out.y = Eigen::Map<const Eigen::VectorXd>(data.y.data(), out.n);
    }

    // Linear design.
    out.X.resize(out.n, static_cast<Eigen::Index>(d));
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < linear_cols.size(); ++j, ++col) {
        Standardized s = standardize(*linear_cols[j], out.names[col]);
        out.X.col(col) = s.values;
        out.x_scale.push_back(s.scale);
    }
    for (std::size_t j : spline_cols) {
        Standardized s = standardize(data.x_nonlinear[j], out.names[col]);
        out.X.col(col) = s.values;
        out.x_scale.push_back(s.scale);
        ++col;
    }

    // Spline blocks on the standardized continuous columns.
    out.block_index.push_back(0);
    std::vector<BasisFactorization> bases;
    for (std::size_t b = 0; b < spline_cols.size(); ++b) {
        const Eigen::Index xcol = out.num_linear_only + static_cast<Eigen::Index>(b);
        const std::span<const double> xs(out.X.col(xcol).data(), n);
        try {
            KnotSpec knots = place_knots(xs, options.num_basis);
            bases.push_back(canonical_dr_basis(xs, knots, {.keep_intermediates = false}));
        } catch (const DegeneratePredictor& e) {
            throw DegeneratePredictor(out.names[xcol], e.what());
        }
        out.block_index.push_back(out.block_index.back() + bases.back().num_basis());
    }
    out.Z.resize(out.n, out.block_index.back());
    for (std::size_t b = 0; b < bases.size(); ++b) {
        out.Z.middleCols(out.block_index[b], bases[b].num_basis()) = bases[b].z;
        bases[b].z.resize(0, 0);
    }
    out.bases = std::move(bases);

    // Sufficient statistics.
    out.XTy.noalias() = out.X.transpose() * out.y;
    out.XTX = gram(out.X);
    out.ZTy.noalias() = out.Z.transpose() * out.y;
    out.ZTX.noalias() = out.Z.transpose() * out.X;
    out.ZTZ = gram(out.Z);
    out.yT1 = response == ResponseType::Gaussian ? 0.0 : out.y.sum();
    return out;
}

}  // namespace spikegam
