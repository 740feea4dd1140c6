#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spikegam/model.hpp"
#include "spikegam/spline_basis.hpp"

namespace spikegam {

// Original, unstandardized input columns.
struct RawDataset {
    std::vector<double> y;
    std::vector<std::vector<double>> x_linear;     // linear-only candidates
    std::vector<std::vector<double>> x_nonlinear;  // continuous candidates (linear + spline)
    std::vector<std::string> linear_names;         // optional; generated when empty
    std::vector<std::string> nonlinear_names;

    std::size_t n() const { return y.size(); }

    // Throws InvalidInput (lengths, non-finite values, non-binary response in
    // binary mode) or DegeneratePredictor (constant columns).
    void validate(ResponseType response) const;
};

struct AffineScale {
    double mean = 0.0;
    double sd = 1.0;

    double forward(double v) const { return (v - mean) / sd; }
    double inverse(double v) const { return mean + sd * v; }
};

struct Standardized {
    Eigen::VectorXd values;
    AffineScale scale;
};

// Sample mean 0 and sample sd 1 (n - 1 denominator).
Standardized standardize(std::span<const double> v, const std::string& name = "");

struct PrepareOptions {
    int num_basis = 30;               // requested K per spline block, reduced for small samples
    int linear_only_threshold = 15;   // continuous candidates with fewer unique values become linear-only
    std::size_t memory_limit_bytes = std::size_t(6) << 30;
};

// Where an X column came from in the RawDataset.
struct ColumnSource {
    bool nonlinear = false;  // x_nonlinear when true, x_linear otherwise
    std::size_t index = 0;
};

struct PreparedData {
    ResponseType response = ResponseType::Gaussian;
    Eigen::Index n = 0;

    Eigen::VectorXd y;  // standardized (Gaussian) or 0/1 (binary)
    Eigen::MatrixXd X;  // [linear-only columns, continuous columns], standardized
    Eigen::MatrixXd Z;  // spline blocks side by side
    std::vector<BasisFactorization> bases;  // one per block; their z member is left empty, see Z
    std::vector<Eigen::Index> block_index;  // c_1 = 0, c_{j+1} = c_j + K_j

    // Sufficient statistics.
    Eigen::VectorXd XTy;
    Eigen::MatrixXd XTX;
    Eigen::VectorXd ZTy;
    Eigen::MatrixXd ZTX;
    Eigen::MatrixXd ZTZ;
    double yT1 = 0.0;  // zero for standardized Gaussian y

    AffineScale y_scale;                 // identity for binary responses
    std::vector<AffineScale> x_scale;    // per X column
    std::vector<std::string> names;      // per X column
    std::vector<ColumnSource> source;    // per X column
    int num_linear_only = 0;             // leading X columns without a spline block
    std::vector<std::string> demoted;    // continuous candidates moved to linear-only

    Eigen::Index d() const { return X.cols(); }
    int num_blocks() const { return static_cast<int>(bases.size()); }
    Eigen::Index total_basis() const { return Z.cols(); }
    // X column carrying the linear part of spline block j.
    Eigen::Index block_column(int j) const { return num_linear_only + j; }
    Eigen::Index block_start(int j) const;
    Eigen::Index block_size(int j) const;

    // Views of the sub-blocks (0-based j). Throw InvalidIndex when j is not
    // a valid block.
    auto Z_block(int j) const { return Z.middleCols(block_start(j), block_size(j)); }
    auto ZTy_block(int j) const { return ZTy.segment(block_start(j), block_size(j)); }
    auto ZTX_block(int j) const { return ZTX.middleRows(block_start(j), block_size(j)); }
    auto ZTZ_block(int j, int k) const {
        return ZTZ.block(block_start(j), block_start(k), block_size(j), block_size(k));
    }
};

// Rough peak memory of prepare() for the given shape, in bytes.
std::size_t estimate_prepare_bytes(std::size_t n, std::size_t d, std::size_t total_basis);

PreparedData prepare(const RawDataset& data, ResponseType response, const PrepareOptions& options = {});

}  // namespace spikegam
