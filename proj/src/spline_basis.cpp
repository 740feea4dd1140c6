#include "spikegam/spline_basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "spikegam/errors.hpp"

namespace spikegam {

namespace {

constexpr int kDegree = 3;

std::vector<double> sorted_unique(std::span<const double> x) {
    std::vector<double> v(x.begin(), x.end());
    for (double value : v)
        if (!std::isfinite(value)) throw InvalidInput("spline predictor contains a non-finite value");
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<double> full_knot_vector(const KnotSpec& knots) {
    std::vector<double> t;
    t.reserve(knots.interior.size() + 2 * (kDegree + 1));
    t.insert(t.end(), kDegree + 1, knots.lower);
    t.insert(t.end(), knots.interior.begin(), knots.interior.end());
    t.insert(t.end(), kDegree + 1, knots.upper);
    return t;
}

int find_span(const std::vector<double>& t, int num_bsplines, double x) {
    if (x >= t[num_bsplines]) return num_bsplines - 1;
    if (x <= t[kDegree]) return kDegree;
    const auto it = std::upper_bound(t.begin() + kDegree, t.begin() + num_bsplines + 1, x);
    return static_cast<int>(it - t.begin()) - 1;
}

// Values and derivatives (up to `order`) of the kDegree+1 B-splines that are
// non-zero on span `i`, evaluated with that span's polynomial pieces.
// ders[k][r] is the k-th derivative of B_{i-kDegree+r}.
using SpanDerivs = std::array<std::array<double, kDegree + 1>, kDegree + 1>;

SpanDerivs span_derivatives(const std::vector<double>& t, int i, double x, int order) {
    constexpr int p = kDegree;
    std::array<std::array<double, p + 1>, p + 1> ndu{};
    std::array<double, p + 1> left{}, right{};
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - t[i + 1 - j];
        right[j] = t[i + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    SpanDerivs ders{};
    for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];

    std::array<std::array<double, p + 1>, 2> a{};
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a[0][0] = 1.0;
        for (int k = 1; k <= order; ++k) {
            double d = 0.0;
            const int rk = r - k;
            const int pk = p - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::swap(s1, s2);
        }
    }
    int factor = p;
    for (int k = 1; k <= order; ++k) {
        for (int j = 0; j <= p; ++j) ders[k][j] *= factor;
        factor *= (p - k);
    }
    return ders;
}

Eigen::MatrixXd build_c_os(std::span<const double> x, const KnotSpec& knots, const Eigen::MatrixXd& whitening) {
    const Eigen::Index n = static_cast<Eigen::Index>(x.size());
    const int k = knots.num_basis;
    Eigen::MatrixXd c(n, k + 2);
    c.col(0).setOnes();
    for (Eigen::Index i = 0; i < n; ++i) c(i, 1) = x[i];
    c.rightCols(k).noalias() = bspline_design(x, knots) * whitening;
    return c;
}

Eigen::MatrixXd canonical_columns(const Eigen::MatrixXd& c_os_grid, const BasisFactorization& basis) {
    const int k = basis.num_basis();
    return c_os_grid * basis.transform.rightCols(k);
}

}  // namespace

void KnotSpec::validate() const {
    if (num_basis < 3) throw InvalidParameter("spline basis size K must be at least 3");
    if (static_cast<int>(interior.size()) != num_basis - 2)
        throw InvalidParameter("knot layout must contain exactly K-2 interior knots");
    if (!(lower < upper)) throw InvalidParameter("knot boundary must satisfy lower < upper");
    double previous = lower;
    for (double kappa : interior) {
        if (!(kappa > previous)) throw InvalidParameter("interior knots must be strictly increasing inside the boundary");
        previous = kappa;
    }
    if (!(previous < upper)) throw InvalidParameter("last interior knot must lie below the upper boundary");
}

int default_num_basis(std::span<const double> x, int k_max) {
    const int unique = static_cast<int>(sorted_unique(x).size());
    return std::max(3, std::min(k_max, unique / 2));
}

KnotSpec place_knots(std::span<const double> x, int num_basis) {
    if (num_basis < 3) throw InvalidParameter("spline basis size K must be at least 3");
    const std::vector<double> u = sorted_unique(x);
    const int m = static_cast<int>(u.size());
    // [1 x Z_OS] has K+2 columns, so it needs at least K+2 distinct points.
    if (m < 5)
        throw DegeneratePredictor("", "at least 5 distinct values are needed for a spline basis, got " +
                                          std::to_string(m));
    KnotSpec spec;
    spec.requested_basis = num_basis;
    spec.num_basis = std::min(num_basis, m - 2);
    spec.lower = u.front();
    spec.upper = u.back();
    const int num_interior = spec.num_basis - 2;
    spec.interior.reserve(num_interior);
    for (int k = 1; k <= num_interior; ++k) {
        const double h = (m - 1) * static_cast<double>(k) / (spec.num_basis - 1);
        const int lo = static_cast<int>(std::floor(h));
        const double frac = h - lo;
        const double q = lo + 1 < m ? u[lo] + frac * (u[lo + 1] - u[lo]) : u[lo];
        spec.interior.push_back(q);
    }
    spec.validate();
    return spec;
}

Eigen::MatrixXd bspline_design(std::span<const double> x, const KnotSpec& knots, int derivative) {
    if (derivative < 0 || derivative > kDegree) throw InvalidParameter("derivative order must lie in [0, 3]");
    const std::vector<double> t = full_knot_vector(knots);
    const int nb = knots.num_bsplines();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.size()), nb);
    for (std::size_t row = 0; row < x.size(); ++row) {
        const double xi = x[row];
        if (xi < knots.lower || xi > knots.upper) continue;
        const int span = find_span(t, nb, xi);
        const SpanDerivs ders = span_derivatives(t, span, xi, derivative);
        for (int r = 0; r <= kDegree; ++r) b(static_cast<Eigen::Index>(row), span - kDegree + r) = ders[derivative][r];
    }
    return b;
}

Eigen::MatrixXd bspline_penalty(const KnotSpec& knots) {
    const std::vector<double> t = full_knot_vector(knots);
    const int nb = knots.num_bsplines();
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(nb, nb);
    for (int span = kDegree; span < nb; ++span) {
        const double left = t[span];
        const double right = t[span + 1];
        const double h = right - left;
        if (!(h > 0.0)) continue;
        const std::array<double, 3> pts = {left, 0.5 * (left + right), right};
        const std::array<double, 3> wts = {h / 6.0, 4.0 * h / 6.0, h / 6.0};
        for (int q = 0; q < 3; ++q) {
            const SpanDerivs ders = span_derivatives(t, span, pts[q], 2);
            for (int r = 0; r <= kDegree; ++r)
                for (int s = 0; s <= kDegree; ++s)
                    omega(span - kDegree + r, span - kDegree + s) += wts[q] * ders[2][r] * ders[2][s];
        }
    }
    return 0.5 * (omega + omega.transpose());
}

OSullivanDesign osullivan_design(std::span<const double> x, const KnotSpec& knots) {
    knots.validate();
    if (static_cast<int>(sorted_unique(x).size()) < knots.num_basis + 2)
        throw DegeneratePredictor("", "too few distinct values for the requested spline basis");
    const int k = knots.num_basis;
    OSullivanDesign out;
    out.penalty = bspline_penalty(knots);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.penalty);
    if (eig.info() != Eigen::Success) throw NumericalFailure("eigendecomposition of the spline penalty failed");
    // Ascending eigenvalues: the first two span the linear null space.
    const Eigen::VectorXd values = eig.eigenvalues().tail(k);
    if (!(values.minCoeff() > 0.0)) throw NumericalFailure("spline penalty has fewer than K positive eigenvalues");
    out.whitening = eig.eigenvectors().rightCols(k) * values.cwiseSqrt().cwiseInverse().asDiagonal();
    out.c_os = build_c_os(x, knots, out.whitening);
    out.penalty_indicator = Eigen::VectorXd::Ones(k + 2);
    out.penalty_indicator.head(2).setZero();
    return out;
}

BasisFactorization canonical_dr_basis(std::span<const double> x, const KnotSpec& knots, const BasisOptions& options) {
    OSullivanDesign os = osullivan_design(x, knots);
    const int k = knots.num_basis;
    const int p = k + 2;

    // Step 3: thin SVD of C_OS.
    Eigen::BDCSVD<Eigen::MatrixXd> svd_c(os.c_os, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd d_c = svd_c.singularValues();
    if (!(d_c.minCoeff() > d_c.maxCoeff() * 1e-13)) {
        std::ostringstream msg;
        msg << "O'Sullivan design is numerically rank deficient (singular values " << d_c.maxCoeff() << " .. "
            << d_c.minCoeff() << ")";
        throw NumericalFailure(msg.str());
    }
    const Eigen::MatrixXd& v_c = svd_c.matrixV();

    // Step 4: SVD of M = diag(1/d_C) V_C^T D V_C diag(1/d_C). Since D is a
    // 0/1 diagonal, M = A^T A with A the penalized rows of V_C diag(1/d_C), so
    // its singular vectors are the right singular vectors of A and its
    // singular values are squares of those of A. Working with A avoids
    // squaring the condition number, which matters for skewed predictors.
    const Eigen::VectorXd inv_d_c = d_c.cwiseInverse();
    const Eigen::MatrixXd a = v_c.bottomRows(k) * inv_d_c.asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_d(a, Eigen::ComputeFullV);
    Eigen::VectorXd d_d = Eigen::VectorXd::Zero(p);
    d_d.head(k) = svd_d.singularValues().array().square().matrix();
    Eigen::MatrixXd u_d = svd_d.matrixV();

    // Step 6: enforce non-increasing singular values.
    std::vector<int> order(p);
    for (int i = 0; i < p; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return d_d[a] > d_d[b]; });
    if (!std::is_sorted(order.begin(), order.end())) {
        Eigen::VectorXd d_sorted(p);
        Eigen::MatrixXd u_sorted(p, p);
        for (int i = 0; i < p; ++i) {
            d_sorted[i] = d_d[order[i]];
            u_sorted.col(i) = u_d.col(order[i]);
        }
        d_d = d_sorted;
        u_d = u_sorted;
    }
    if (!(d_d[k - 1] > 0.0)) throw NumericalFailure("penalty-whitened matrix has fewer than K positive singular values");

    // Step 7: spherical scaling of the penalized directions.
    const double omega21 = std::sqrt(d_d[k - 1]);
    Eigen::VectorXd s_d(p);
    for (int i = 0; i < k; ++i) s_d[i] = omega21 / std::sqrt(d_d[i]);
    s_d.tail(2).setOnes();

    // Steps 5, 8, 9.
    const Eigen::MatrixXd& u_c = svd_c.matrixU();
    Eigen::MatrixXd c_cdr = (u_c * u_d) * s_d.asDiagonal();
    Eigen::MatrixXd transform = v_c * inv_d_c.asDiagonal() * u_d * s_d.asDiagonal();

    // Step 10: reverse column order.
    c_cdr = c_cdr.rowwise().reverse().eval();
    transform = transform.rowwise().reverse().eval();

    BasisFactorization out;
    out.knots = knots;
    out.z = c_cdr.rightCols(k);  // step 11: columns 3..K+2
    out.transform = std::move(transform);
    out.whitening = std::move(os.whitening);
    if (options.keep_intermediates) {
        out.c_os = std::move(os.c_os);
        out.c_cdr = std::move(c_cdr);
        out.u_c = u_c;
        out.d_c = d_c;
        out.v_c = v_c;
        out.u_d = std::move(u_d);
        out.d_d = std::move(d_d);
        out.s_d = std::move(s_d);
    }
    return out;
}

Eigen::MatrixXd evaluate_on_grid(std::span<const double> grid, const BasisFactorization& basis) {
    for (double g : grid) {
        if (!(g >= basis.knots.lower && g <= basis.knots.upper)) {
            std::ostringstream msg;
            msg << "grid point " << g << " lies outside the knot range [" << basis.knots.lower << ", "
                << basis.knots.upper << "]";
            throw OutOfRange(msg.str());
        }
    }
    return canonical_columns(build_c_os(grid, basis.knots, basis.whitening), basis);
}

Eigen::MatrixXd evaluate_clamped(std::span<const double> points, const BasisFactorization& basis) {
    std::vector<double> clamped(points.begin(), points.end());
    for (double& v : clamped) v = std::clamp(v, basis.knots.lower, basis.knots.upper);
    return evaluate_on_grid(clamped, basis);
}

}  // namespace spikegam
