#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace spikegam {

// Cubic-spline knot layout for one predictor. Boundary knots are coincident
// (multiplicity four) at `lower` and `upper`.
struct KnotSpec {
    int num_basis = 0;        // K: number of canonical basis columns
    int requested_basis = 0;  // K asked for before any reduction
    std::vector<double> interior;  // K-2 strictly increasing knots in (lower, upper)
    double lower = 0.0;
    double upper = 0.0;

    bool reduced() const { return num_basis < requested_basis; }
    int num_bsplines() const { return num_basis + 2; }

    // Throws InvalidParameter when the layout is inconsistent.
    void validate() const;
};

// K = min(k_max, floor(unique/2)) with a floor of 3.
int default_num_basis(std::span<const double> x, int k_max = 30);

// Interior knots at the k/(K-1) sample quantiles (linear interpolation) of
// the distinct x values. When the data cannot support K columns, K is reduced
// to (distinct - 2) and `requested_basis` records the original request.
KnotSpec place_knots(std::span<const double> x, int num_basis);

// n x (K+2) matrix of cubic B-spline values (or derivatives) at x.
Eigen::MatrixXd bspline_design(std::span<const double> x, const KnotSpec& knots, int derivative = 0);

// (K+2) x (K+2) matrix of integrated products of B-spline second derivatives
// over [lower, upper]. The integrand is piecewise quadratic, so Simpson's rule
// on each knot interval is exact.
Eigen::MatrixXd bspline_penalty(const KnotSpec& knots);

struct OSullivanDesign {
    Eigen::MatrixXd c_os;           // [1 x Z_OS], n x (K+2)
    Eigen::VectorXd penalty_indicator;  // diagonal of D = diag(0, 0, 1_K)
    Eigen::MatrixXd whitening;      // (K+2) x K; Z_OS = B * whitening
    Eigen::MatrixXd penalty;        // B-spline penalty matrix

    Eigen::MatrixXd d_matrix() const { return penalty_indicator.asDiagonal(); }
};

// Z_OS = B U diag(1/sqrt(d)) over the K positive penalty eigenpairs, so the
// roughness penalty of Z_OS u is exactly ||u||^2.
OSullivanDesign osullivan_design(std::span<const double> x, const KnotSpec& knots);

struct BasisOptions {
    // Keep the SVD factors and the full canonical matrix. Large-n callers
    // that only need Z and L can switch this off.
    bool keep_intermediates = true;
};

struct BasisFactorization {
    KnotSpec knots;
    Eigen::MatrixXd z;          // n x K canonical Demmler-Reinsch columns
    Eigen::MatrixXd transform;  // L: (K+2) x (K+2), columns already reversed
    Eigen::MatrixXd whitening;  // O'Sullivan whitening, needed to rebuild C_OS on new points

    // Intermediates (empty when keep_intermediates is false).
    Eigen::MatrixXd c_os;
    Eigen::MatrixXd c_cdr;  // columns reversed, so C_OS * transform == c_cdr
    Eigen::MatrixXd u_c;
    Eigen::VectorXd d_c;
    Eigen::MatrixXd v_c;
    Eigen::MatrixXd u_d;
    Eigen::VectorXd d_d;  // non-increasing
    Eigen::VectorXd s_d;  // before column reversal, last two entries equal 1

    int num_basis() const { return knots.num_basis; }
};

BasisFactorization canonical_dr_basis(std::span<const double> x, const KnotSpec& knots,
                                      const BasisOptions& options = {});

// Canonical basis values at new points; agrees with `z` when grid == x.
// Throws OutOfRange for points outside [lower, upper].
Eigen::MatrixXd evaluate_on_grid(std::span<const double> grid, const BasisFactorization& basis);

// Same as evaluate_on_grid but points outside the knot range are clamped to
// the nearest boundary first (used for prediction at fresh predictor draws).
Eigen::MatrixXd evaluate_clamped(std::span<const double> points, const BasisFactorization& basis);

}  // namespace spikegam
