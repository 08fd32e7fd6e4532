// SPDX-License-Identifier: Apache-2.0
#include "mixadc/crb.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace mixadc {

namespace {

// Column mask 1_N kron delta (length MN, snapshot-major, element fastest).
Eigen::ArrayXd column_mask(const Placement& placement, int n, bool high) {
    const int m = placement.size();
    Eigen::ArrayXd mask(static_cast<Eigen::Index>(m) * n);
    for (int nn = 0; nn < n; ++nn)
        for (int mm = 0; mm < m; ++mm)
            mask[static_cast<Eigen::Index>(nn) * m + mm] =
                (placement.high_precision[mm] == high) ? 1.0 : 0.0;
    return mask;
}

Mat one_bit_quadratic_form(const CMat& u, const CVec& lambda, double sigma) {
    const Mat ur = u.real();
    const Mat ui = u.imag();
    const Vec lr = lambda.real();
    const Vec li = lambda.imag();
    Mat f = ur * lr.asDiagonal() * ur.transpose() + ui * li.asDiagonal() * ui.transpose();
    f /= kPi * sigma * sigma;
    return 0.5 * (f + f.transpose());
}

}  // namespace

CMat steering_derivative(const ArrayConfig& config, const Vec& omegas) {
    CMat a = steering_matrix(config, omegas);
    for (int row = 0; row < config.num_elements; ++row)
        a.row(row) *= cplx(0.0, 2.0 * config.spacing_ratio * row);
    return a;
}

UMatrix build_u(const CMat& a, const CMat& a_dot, const CMat& s, const ParamLayout& layout,
                const CMat* thresholds, double sigma) {
    const int m = static_cast<int>(a.rows());
    const int k = layout.num_sources;
    const int n = layout.num_snapshots;
    if (a.cols() != k || a_dot.rows() != m || a_dot.cols() != k || s.rows() != k ||
        s.cols() != n)
        throw std::invalid_argument("build_u: shape mismatch");
    if (!layout.noise_known && (thresholds == nullptr || !(sigma > 0.0)))
        throw std::invalid_argument("build_u: unknown-noise layout needs thresholds and sigma");

    const Eigen::Index mn = static_cast<Eigen::Index>(m) * n;
    UMatrix out;
    out.layout = layout;
    out.u = CMat::Zero(layout.dim(), mn);

    // Delta^H rows: Delta column k stacks s_k(n) * adot(:, k) over snapshots.
    for (int kk = 0; kk < k; ++kk)
        for (int nn = 0; nn < n; ++nn)
            out.u.block(kk, static_cast<Eigen::Index>(nn) * m, 1, m) =
                (std::conj(s(kk, nn)) * a_dot.col(kk).conjugate()).transpose();

    // G^H and (iG)^H rows, G = I_N kron A.
    for (int nn = 0; nn < n; ++nn)
        for (int kk = 0; kk < k; ++kk) {
            const int re_row = k + nn * k + kk;
            const int im_row = k + k * n + nn * k + kk;
            out.u.block(re_row, static_cast<Eigen::Index>(nn) * m, 1, m) =
                a.col(kk).adjoint();
            out.u.block(im_row, static_cast<Eigen::Index>(nn) * m, 1, m) =
                cplx(0.0, -1.0) * a.col(kk).adjoint();
        }

    if (!layout.noise_known) {
        const CMat zeta = a * s - *thresholds;  // M x N
        for (int nn = 0; nn < n; ++nn)
            out.u.block(layout.dim() - 1, static_cast<Eigen::Index>(nn) * m, 1, m) =
                zeta.col(nn).transpose() / sigma;
    }
    return out;
}

FisherMatrix fim_high_precision(const UMatrix& u, double sigma, int num_elements) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("fim_high_precision: sigma must be > 0");
    const ParamLayout& layout = u.layout;
    const int phi_dim = layout.num_sources + 2 * layout.num_sources * layout.num_snapshots;

    FisherMatrix f;
    f.layout = layout;
    f.entries = Mat::Zero(layout.dim(), layout.dim());
    const CMat uphi = u.u.topRows(phi_dim);
    Mat block = (2.0 / (sigma * sigma)) * (uphi * uphi.adjoint()).real();
    f.entries.topLeftCorner(phi_dim, phi_dim) = 0.5 * (block + block.transpose());
    if (!layout.noise_known)
        f.entries(phi_dim, phi_dim) =
            4.0 * layout.num_snapshots * num_elements / (sigma * sigma);
    return f;
}

LambdaWeights lambda_weights(const CMat& a, const CMat& s, const CMat& thresholds,
                             double sigma) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("lambda_weights: sigma must be > 0");
    const CMat zeta = a * s - thresholds;
    const double scale = std::numbers::sqrt2 / sigma;
    LambdaWeights w;
    w.lambda.resize(zeta.size());
    Eigen::Index idx = 0;
    for (Eigen::Index nn = 0; nn < zeta.cols(); ++nn)
        for (Eigen::Index mm = 0; mm < zeta.rows(); ++mm, ++idx)
            w.lambda[idx] = cplx(b_weight(zeta(mm, nn).real() * scale),
                                 b_weight(zeta(mm, nn).imag() * scale));
    return w;
}

FisherMatrix fim_one_bit(const UMatrix& u, const LambdaWeights& weights, double sigma) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("fim_one_bit: sigma must be > 0");
    if (weights.lambda.size() != u.u.cols())
        throw std::invalid_argument("fim_one_bit: weight length mismatch");
    FisherMatrix f;
    f.layout = u.layout;
    f.entries = one_bit_quadratic_form(u.u, weights.lambda, sigma);
    return f;
}

FisherMatrix fim_mixed(const CMat& a, const CMat& a_dot, const CMat& s,
                       const CMat& thresholds, double sigma, const Placement& placement,
                       const ParamLayout& layout) {
    placement.validate();
    if (!(sigma > 0.0))
        throw std::invalid_argument("fim_mixed: sigma must be > 0");

    const UMatrix u = build_u(a, a_dot, s, layout, &thresholds, sigma);
    const int phi_dim = layout.num_sources + 2 * layout.num_sources * layout.num_snapshots;
    const Eigen::ArrayXd mask_high = column_mask(placement, layout.num_snapshots, true);
    const Eigen::ArrayXd mask_onebit = column_mask(placement, layout.num_snapshots, false);

    FisherMatrix f;
    f.layout = layout;
    f.entries = Mat::Zero(layout.dim(), layout.dim());

    // High-precision term over delta-selected columns.
    const CMat u0 = u.u.topRows(phi_dim) * mask_high.matrix().asDiagonal();
    Mat hp = (2.0 / (sigma * sigma)) * (u0 * u0.adjoint()).real();
    f.entries.topLeftCorner(phi_dim, phi_dim) = 0.5 * (hp + hp.transpose());
    if (!layout.noise_known)
        f.entries(phi_dim, phi_dim) =
            4.0 * layout.num_snapshots * placement.num_high() / (sigma * sigma);

    // One-bit term over the complement, with the zeta row when sigma unknown.
    const CMat u1 = u.u * mask_onebit.matrix().asDiagonal();
    const LambdaWeights weights = lambda_weights(a, s, thresholds, sigma);
    f.entries += one_bit_quadratic_form(u1, weights.lambda, sigma);
    return f;
}

CrbReport crb_from_fim(const FisherMatrix& f) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(f.entries);
    if (eig.info() != Eigen::Success)
        throw SingularFim("crb_from_fim: eigendecomposition failed");
    const Vec& vals = eig.eigenvalues();
    const double vmax = vals.cwiseAbs().maxCoeff();
    const double vmin = vals.minCoeff();
    if (!(vmin > 1e-12 * vmax))
        throw SingularFim("crb_from_fim: Fisher matrix is singular (min eig " +
                          std::to_string(vmin) + ", max eig " + std::to_string(vmax) + ")");

    CrbReport report;
    report.layout = f.layout;
    report.condition_number = vmax / vmin;
    report.matrix =
        eig.eigenvectors() * vals.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    const int k = f.layout.num_sources;
    report.doa_block = report.matrix.topLeftCorner(k, k);
    report.doa_variances = report.doa_block.diagonal();
    return report;
}

CMat signal_covariance(const CMat& s) {
    return (s * s.adjoint()) / static_cast<double>(s.cols());
}

Mat crb_lower_bound_doa(const CMat& a, const CMat& a_dot, const CMat& p_hat,
                        const Placement& placement, double sigma, int num_snapshots) {
    placement.validate();
    const int m = placement.size();
    if (a.rows() != m || a_dot.rows() != m)
        throw std::invalid_argument("crb_lower_bound_doa: shape mismatch");

    Vec sigma0 = Vec::Constant(m, placement.rho_low);
    for (int i = 0; i < m; ++i)
        if (placement.high_precision[i]) sigma0[i] = placement.rho_high;

    const CMat sa = sigma0.asDiagonal() * a;  // Sigma0 A
    const CMat gram = a.adjoint() * sa;       // A^H Sigma0 A
    const CMat omega =
        CMat(sigma0.asDiagonal()) - sa * gram.llt().solve(sa.adjoint());

    const Mat inner = ((a_dot.adjoint() * omega * a_dot).cwiseProduct(p_hat.transpose())).real();
    Eigen::SelfAdjointEigenSolver<Mat> eig(inner);
    if (!(eig.eigenvalues().minCoeff() > 1e-12 * eig.eigenvalues().cwiseAbs().maxCoeff()))
        throw SingularFim("crb_lower_bound_doa: inner matrix is singular");
    const Mat inv = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                    eig.eigenvectors().transpose();
    return (sigma * sigma / (2.0 * num_snapshots)) * inv;
}

double placement_score(const Vec& g) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double pos = static_cast<double>(i);  // (i - 1) with 1-based indexing
        s0 += g[i];
        s1 += g[i] * pos;
        s2 += g[i] * pos * pos;
    }
    return s2 * s0 - s1 * s1;
}

double placement_score_pairwise(const Vec& g) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i)
        for (Eigen::Index j = i + 1; j < g.size(); ++j) {
            const double d = static_cast<double>(j - i);
            s += g[i] * g[j] * d * d;
        }
    return s;
}

Vec asymptotic_crb(const Placement& placement, const Vec& snrs_linear, int num_snapshots) {
    placement.validate();
    if (placement.size() < 2)
        throw DegenerateArray("asymptotic_crb: need at least two elements");
    const Vec g = placement.coefficients();
    const double score = placement_score(g);
    const double factor = g.sum() / (2.0 * num_snapshots * score);
    return factor * snrs_linear.cwiseInverse();
}

double asymptotic_crb_all_high(int num_elements, int num_snapshots, double snr_linear) {
    if (num_elements < 2)
        throw DegenerateArray("asymptotic_crb_all_high: need at least two elements");
    const double m = num_elements;
    return 6.0 / (num_snapshots * m * (m * m - 1.0) * snr_linear);
}

double asymptotic_crb_all_onebit(int num_elements, int num_snapshots, double snr_linear) {
    return (kPi / 2.0) * asymptotic_crb_all_high(num_elements, num_snapshots, snr_linear);
}

double omega_var_to_theta_deg_var(double var_omega, double theta_deg) {
    const double jac = kPi * std::cos(theta_deg * kPi / 180.0);
    const double rad2deg = 180.0 / kPi;
    return var_omega / (jac * jac) * rad2deg * rad2deg;
}

}  // namespace mixadc
