// SPDX-License-Identifier: Apache-2.0
#include "mixadc/estimation.hpp"

#include "mixadc/special.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mixadc {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

struct ObsView {
    int m = 0, n = 0, m0 = 0, m1 = 0;
    std::vector<int> hi, lo;
    Mat y1r, y1i;      // one-bit signs
    Mat h1r, h1i;      // thresholds at one-bit rows
    const CMat* y0 = nullptr;

    explicit ObsView(const MixedObservation& obs) {
        hi = obs.placement.high_rows();
        lo = obs.placement.onebit_rows();
        m = obs.placement.size();
        m0 = static_cast<int>(hi.size());
        m1 = static_cast<int>(lo.size());
        n = obs.num_snapshots();
        y0 = &obs.y_high;
        y1r = obs.y_onebit.real();
        y1i = obs.y_onebit.imag();
        h1r.resize(m1, n);
        h1i.resize(m1, n);
        for (int j = 0; j < m1; ++j) {
            h1r.row(j) = obs.thresholds.entries.row(lo[j]).real();
            h1i.row(j) = obs.thresholds.entries.row(lo[j]).imag();
        }
    }
};

CMat targets_signal(const std::vector<TargetEstimate>& targets, int n) {
    CMat s(static_cast<Eigen::Index>(targets.size()), n);
    for (std::size_t k = 0; k < targets.size(); ++k) {
        if (targets[k].waveform.size() != n)
            throw std::invalid_argument("targets_signal: waveform length mismatch");
        s.row(static_cast<Eigen::Index>(k)) = targets[k].waveform.transpose();
    }
    return s;
}

Vec targets_omegas(const std::vector<TargetEstimate>& targets) {
    Vec w(static_cast<Eigen::Index>(targets.size()));
    for (std::size_t k = 0; k < targets.size(); ++k) w[static_cast<Eigen::Index>(k)] = targets[k].omega;
    return w;
}

// NLL of the full model given the synthesized noiseless matrix A*S (M x N).
double nll_from_model(const ObsView& v, const CMat& model, double sigma) {
    const double c = kSqrt2 / sigma;
    double nll = 0.0;
    if (v.m0 > 0) {
        double quad = 0.0;
        for (int i = 0; i < v.m0; ++i)
            for (int nn = 0; nn < v.n; ++nn)
                quad += std::norm((*v.y0)(i, nn) - model(v.hi[i], nn));
        nll += quad / (sigma * sigma) +
               v.m0 * v.n * (2.0 * std::log(sigma) + std::log(kPi));
    }
    for (int j = 0; j < v.m1; ++j)
        for (int nn = 0; nn < v.n; ++nn) {
            const cplx z = model(v.lo[j], nn);
            const double gr = v.y1r(j, nn) * (z.real() - v.h1r(j, nn)) * c;
            const double gi = v.y1i(j, nn) * (z.imag() - v.h1i(j, nn)) * c;
            if (std::isnan(gr) || std::isnan(gi))
                throw NonFinite("neg_log_likelihood: non-finite Phi argument");
            nll += neg_log_phi(gr) + neg_log_phi(gi);
        }
    return nll;
}

// Bounded golden-section minimization; returns {x, f(x)}.
template <typename F>
std::pair<double, double> golden_minimize(F&& f, double lo, double hi, int iters) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < iters; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

}  // namespace

AngularGrid AngularGrid::build(const ArrayConfig& config, int grid_mult) {
    config.validate();
    if (grid_mult < 1)
        throw std::invalid_argument("AngularGrid: grid_mult must be >= 1");
    AngularGrid grid;
    const int kw = grid_mult * config.num_elements;
    grid.spacing = 2.0 * kPi / kw;
    grid.omegas.resize(kw);
    for (int r = 0; r < kw; ++r) grid.omegas[r] = -kPi + r * grid.spacing;
    grid.steering = steering_matrix(config, grid.omegas);
    return grid;
}

double neg_log_likelihood(const ArrayConfig& config,
                          const std::vector<TargetEstimate>& targets, double sigma,
                          const MixedObservation& observation) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("neg_log_likelihood: sigma must be > 0");
    const ObsView v(observation);
    CMat model = CMat::Zero(v.m, v.n);
    if (!targets.empty()) {
        const CMat a = steering_matrix(config, targets_omegas(targets));
        model = a * targets_signal(targets, v.n);
    }
    return nll_from_model(v, model, sigma);
}

Vec nll_gradient(const ArrayConfig& config, const std::vector<TargetEstimate>& targets,
                 double sigma, const MixedObservation& observation) {
    const ObsView v(observation);
    const int k = static_cast<int>(targets.size());
    const int n = v.n;
    const Vec omegas = targets_omegas(targets);
    const CMat a = steering_matrix(config, omegas);
    const CMat a_dot = [&] {
        CMat d = a;
        for (int row = 0; row < v.m; ++row)
            d.row(row) *= cplx(0.0, 2.0 * config.spacing_ratio * row);
        return d;
    }();
    const CMat s = targets_signal(targets, n);
    const CMat model = a * s;
    const double c = kSqrt2 / sigma;

    Vec grad = Vec::Zero(k + 2 * k * n + 1);
    auto re_idx = [&](int kk, int nn) { return k + kk * n + nn; };
    auto im_idx = [&](int kk, int nn) { return k + k * n + kk * n + nn; };
    const int sigma_idx = k + 2 * k * n;

    // Gaussian block.
    if (v.m0 > 0) {
        CMat r0(v.m0, n);
        CMat a0(v.m0, k), a0_dot(v.m0, k);
        for (int i = 0; i < v.m0; ++i) {
            r0.row(i) = (*v.y0).row(i) - model.row(v.hi[i]);
            a0.row(i) = a.row(v.hi[i]);
            a0_dot.row(i) = a_dot.row(v.hi[i]);
        }
        const CMat proj = a0.adjoint() * r0;       // K x N
        const CMat proj_dot = a0_dot.adjoint() * r0;
        const double inv_s2 = 1.0 / (sigma * sigma);
        for (int kk = 0; kk < k; ++kk) {
            double gw = 0.0;
            for (int nn = 0; nn < n; ++nn) {
                grad[re_idx(kk, nn)] += -2.0 * inv_s2 * proj(kk, nn).real();
                grad[im_idx(kk, nn)] += -2.0 * inv_s2 * proj(kk, nn).imag();
                gw += -2.0 * (s(kk, nn) * std::conj(proj_dot(kk, nn))).real();
            }
            grad[kk] += gw * inv_s2;
        }
        grad[sigma_idx] += -2.0 * r0.squaredNorm() / (sigma * sigma * sigma) +
                           2.0 * v.m0 * n / sigma;
    }

    // One-bit block.
    for (int j = 0; j < v.m1; ++j) {
        const int row = v.lo[j];
        for (int nn = 0; nn < n; ++nn) {
            const cplx z = model(row, nn);
            const double gr = v.y1r(j, nn) * (z.real() - v.h1r(j, nn)) * c;
            const double gi = v.y1i(j, nn) * (z.imag() - v.h1i(j, nn)) * c;
            const double fr = neg_log_phi_deriv(gr);
            const double fi = neg_log_phi_deriv(gi);
            const double wr = fr * v.y1r(j, nn) * c;
            const double wi = fi * v.y1i(j, nn) * c;
            for (int kk = 0; kk < k; ++kk) {
                const cplx akr = a(row, kk);
                const cplx dks = a_dot(row, kk) * s(kk, nn);
                grad[re_idx(kk, nn)] += wr * akr.real() + wi * akr.imag();
                grad[im_idx(kk, nn)] += -wr * akr.imag() + wi * akr.real();
                grad[kk] += wr * dks.real() + wi * dks.imag();
            }
            grad[sigma_idx] += -(fr * gr + fi * gi) / sigma;
        }
    }
    return grad;
}

// ---------------------------------------------------------------------------
// SLIM
// ---------------------------------------------------------------------------

namespace {

struct SlimWork {
    Mat gamma_r, gamma_i;  // M1 x N
    CMat d;                // M1 x N surrogate

    void update(const ObsView& v, const CMat& a1b, double zeta) {
        gamma_r = v.y1r.cwiseProduct(a1b.real() - zeta * v.h1r);
        gamma_i = v.y1i.cwiseProduct(a1b.imag() - zeta * v.h1i);
        Mat xi_r = gamma_r.unaryExpr([](double x) { return x - neg_log_phi_deriv(x); });
        Mat xi_i = gamma_i.unaryExpr([](double x) { return x - neg_log_phi_deriv(x); });
        d = (v.y1r.cwiseProduct(xi_r)).cast<cplx>() +
            cplx(0.0, 1.0) * (v.y1i.cwiseProduct(xi_i)).cast<cplx>();
    }
};

Vec row_powers(const CMat& b, double q, int n) {
    Vec p(b.rows());
    for (Eigen::Index r = 0; r < b.rows(); ++r)
        p[r] = std::pow(b.row(r).norm(), 2.0 - q) / n;
    // Absolute floor: keeps P-hat inverses finite while letting dead rows
    // settle at a fixed value. A floor tied to the current maximum would
    // drift with the scale estimate and spoil descent of the objective.
    return p.cwiseMax(1e-300);
}

double slim_objective(const ObsView& v, const SlimWork& work, const CMat& b,
                      const CMat& a0b, double zeta, double q) {
    double l1 = 0.0;
    for (Eigen::Index j = 0; j < work.gamma_r.rows(); ++j)
        for (Eigen::Index nn = 0; nn < work.gamma_r.cols(); ++nn)
            l1 += neg_log_phi(work.gamma_r(j, nn)) + neg_log_phi(work.gamma_i(j, nn));

    double l0 = 0.0;
    if (v.m0 > 0)
        l0 = 0.5 * (zeta * (*v.y0) - a0b).squaredNorm() -
             2.0 * v.m0 * v.n * std::log(zeta);

    // q -> 0 limit of (2/q)(||b_r||^q - 1) is ln ||b_r||^2. Rows pinned at
    // the P-hat floor reconstruct to powers far below this clamp, so their
    // contribution is a constant and descent is preserved.
    double pen = 0.0;
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
        const double nrm2 = b.row(r).squaredNorm();
        if (q > 0.0)
            pen += (2.0 / q) * std::pow(nrm2, q / 2.0);
        else
            pen += std::log(std::max(nrm2, 1e-280));
    }
    return l1 + l0 + pen;
}

}  // namespace

SlimResult slim(const ArrayConfig& config, const MixedObservation& observation,
                const AngularGrid& grid, const SlimOptions& options) {
    const ObsView v(observation);
    const int n = v.n;
    const CMat& a = grid.steering;
    const int kw = grid.size();

    CMat a0(v.m0, kw), a1(v.m1, kw);
    for (int i = 0; i < v.m0; ++i) a0.row(i) = a.row(v.hi[i]);
    for (int j = 0; j < v.m1; ++j) a1.row(j) = a.row(v.lo[j]);

    // T: high-precision rows carry samples, one-bit rows carry thresholds.
    CMat t(v.m, n);
    CMat pseudo(v.m, n);
    for (int i = 0; i < v.m0; ++i) {
        t.row(v.hi[i]) = (*v.y0).row(i);
        pseudo.row(v.hi[i]) = (*v.y0).row(i);
    }
    for (int j = 0; j < v.m1; ++j) {
        t.row(v.lo[j]) = observation.thresholds.entries.row(v.lo[j]);
        pseudo.row(v.lo[j]) = observation.y_onebit.row(j);
    }

    CMat b = (a.adjoint() * pseudo) / static_cast<double>(v.m);  // matched filter
    double zeta = std::sqrt(2.0 * v.m * n / std::max(t.squaredNorm(), 1e-300));

    SlimWork work;
    work.update(v, a1 * b, zeta);

    SlimResult result;
    result.objective.push_back(slim_objective(v, work, b, a0 * b, zeta, options.q));

    Vec p_outer = row_powers(b, options.q, n);
    const double two_over_n = 2.0 / n;

    double last_u = 0.0, last_v = 0.0;
    Vec last_p;
    CMat last_y_tilde;

    for (int outer = 0; outer < options.max_outer; ++outer) {
        Vec p_inner = p_outer;
        for (int inner = 0; inner < options.max_inner; ++inner) {
            CMat q_mat = CMat::Zero(v.m, n);
            for (int j = 0; j < v.m1; ++j) q_mat.row(v.lo[j]) = work.d.row(j);

            const Vec p = row_powers(b, options.q, n);

            // A diag(p) A^H is Toeplitz because each steering column is a
            // geometric sequence in the element index; build it from the
            // first column instead of the full triple product.
            const CVec c = a * p;
            CMat r_mat(v.m, v.m);
            for (int i = 0; i < v.m; ++i)
                for (int j = 0; j <= i; ++j) {
                    r_mat(i, j) = c[i - j];
                    r_mat(j, i) = std::conj(c[i - j]);
                }
            r_mat.diagonal().array() += two_over_n;
            Eigen::LLT<CMat> llt(r_mat);

            const CMat rinv_t = llt.solve(t);
            const CMat rinv_q = llt.solve(q_mat);
            // The stationarity condition carries the 2/N weight of the
            // sparsity surrogate; with it folded into u and v the update is
            // the larger root of v z^2 + u z - 2 M0 N = 0.
            const double u = two_over_n * (t.conjugate().cwiseProduct(rinv_q)).sum().real();
            const double vv = two_over_n * (t.conjugate().cwiseProduct(rinv_t)).sum().real();

            if (v.m0 > 0)
                zeta = (-u + std::sqrt(u * u + 8.0 * vv * v.m0 * n)) / (2.0 * vv);
            else
                zeta = std::max(-u / vv, 1e-12);

            const CMat y_tilde = zeta * t + q_mat;
            b.noalias() = p.asDiagonal() * (a.adjoint() * llt.solve(y_tilde));
            last_u = u;
            last_v = vv;
            last_p = p;
            last_y_tilde = y_tilde;

            work.update(v, a1 * b, zeta);

            const Vec p_new = row_powers(b, options.q, n);
            const double rel = (p_new - p_inner).norm() / std::max(p_inner.norm(), 1e-300);
            p_inner = p_new;
            if (rel < options.eps_inner) break;
        }

        result.objective.push_back(slim_objective(v, work, b, a0 * b, zeta, options.q));
        ++result.outer_iterations;

        const Vec p_new = row_powers(b, options.q, n);
        const double rel = (p_new - p_outer).norm() / std::max(p_outer.norm(), 1e-300);
        p_outer = p_new;
        if (rel < options.eps_outer) break;
    }

    if (last_p.size() > 0) {
        const double quad = last_v * zeta * zeta + last_u * zeta - 2.0 * v.m0 * n;
        result.zeta_root_residual =
            std::abs(quad) / std::max(1.0, 2.0 * v.m0 * n);
        const CMat rhs = a.adjoint() * last_y_tilde;
        const CMat lhs = a.adjoint() * (a * b) +
                         two_over_n * last_p.cwiseInverse().asDiagonal() * b;
        result.b_stationarity_residual =
            (lhs - rhs).norm() / std::max(rhs.norm(), 1e-300);
    }

    result.s_hat = b / zeta;
    result.sigma_hat = kSqrt2 / zeta;
    result.spectrum.resize(kw);
    for (int r = 0; r < kw; ++r)
        result.spectrum[r] =
            std::pow(result.s_hat.row(r).norm(), 2.0 - options.q) / n;
    return result;
}

std::vector<int> peak_pick(const Vec& spectrum, int k) {
    const int kw = static_cast<int>(spectrum.size());
    if (k < 1 || k > kw)
        throw std::invalid_argument("peak_pick: invalid k");

    std::vector<int> maxima;
    for (int i = 0; i < kw; ++i) {
        const bool left_ok = (i == 0) || spectrum[i] > spectrum[i - 1];
        const bool right_ok = (i == kw - 1) || spectrum[i] > spectrum[i + 1];
        if (left_ok && right_ok) maxima.push_back(i);
    }
    auto by_value = [&](int lhs, int rhs) {
        if (spectrum[lhs] != spectrum[rhs]) return spectrum[lhs] > spectrum[rhs];
        return lhs < rhs;
    };
    std::sort(maxima.begin(), maxima.end(), by_value);
    if (static_cast<int>(maxima.size()) >= k) {
        maxima.resize(k);
        return maxima;
    }
    // Fewer strict maxima than requested: fall back to the K largest values.
    std::vector<int> all(kw);
    std::iota(all.begin(), all.end(), 0);
    std::sort(all.begin(), all.end(), by_value);
    all.resize(k);
    return all;
}

// ---------------------------------------------------------------------------
// RELAX
// ---------------------------------------------------------------------------

namespace {

// Minimize the per-snapshot, per-target convex section of the NLL over the
// complex amplitude s_k(n) with everything else fixed. 2x2 Newton.
cplx solve_amplitude(const ObsView& v, const CVec& a0_col, const CVec& a1_col,
                     const CVec& fixed0, const CVec& fixed1, const CVec& y0_col,
                     int nn, double sigma, cplx start) {
    const double c = kSqrt2 / sigma;
    double x = start.real(), y = start.imag();

    auto eval = [&](double xr, double yi, Vec* grad, Mat* hess) {
        double val = 0.0;
        if (grad) grad->setZero();
        if (hess) hess->setZero();
        const cplx sk(xr, yi);
        for (int i = 0; i < v.m0; ++i) {
            const cplx r = y0_col[i] - fixed0[i] - a0_col[i] * sk;
            const double inv = 1.0 / (sigma * sigma);
            val += std::norm(r) * inv;
            if (grad) {
                const cplx g = std::conj(a0_col[i]) * r;
                (*grad)[0] += -2.0 * inv * g.real();
                (*grad)[1] += -2.0 * inv * g.imag();
            }
            if (hess) {
                const double aa = std::norm(a0_col[i]) * 2.0 * inv;
                (*hess)(0, 0) += aa;
                (*hess)(1, 1) += aa;
            }
        }
        for (int j = 0; j < v.m1; ++j) {
            const cplx z = fixed1[j] + a1_col[j] * sk;
            const double gr = v.y1r(j, nn) * (z.real() - v.h1r(j, nn)) * c;
            const double gi = v.y1i(j, nn) * (z.imag() - v.h1i(j, nn)) * c;
            val += neg_log_phi(gr) + neg_log_phi(gi);
            const double ar = a1_col[j].real(), ai = a1_col[j].imag();
            // d z_R / d(x, y) = (ar, -ai); d z_I / d(x, y) = (ai, ar)
            if (grad) {
                const double wr = neg_log_phi_deriv(gr) * v.y1r(j, nn) * c;
                const double wi = neg_log_phi_deriv(gi) * v.y1i(j, nn) * c;
                (*grad)[0] += wr * ar + wi * ai;
                (*grad)[1] += -wr * ai + wi * ar;
            }
            if (hess) {
                const double hr = neg_log_phi_deriv2(gr) * c * c;
                const double hi = neg_log_phi_deriv2(gi) * c * c;
                (*hess)(0, 0) += hr * ar * ar + hi * ai * ai;
                (*hess)(0, 1) += -hr * ar * ai + hi * ai * ar;
                (*hess)(1, 1) += hr * ai * ai + hi * ar * ar;
            }
        }
        if (hess) (*hess)(1, 0) = (*hess)(0, 1);
        return val;
    };

    Vec grad(2);
    Mat hess(2, 2);
    double val = eval(x, y, &grad, &hess);
    for (int it = 0; it < 40; ++it) {
        if (grad.norm() < 1e-11 * (1.0 + std::abs(val))) break;
        hess(0, 0) += 1e-12;
        hess(1, 1) += 1e-12;
        const Vec step = hess.ldlt().solve(grad);
        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            const double cand = eval(x - alpha * step[0], y - alpha * step[1], nullptr, nullptr);
            if (cand <= val - 1e-4 * alpha * grad.dot(step)) {
                x -= alpha * step[0];
                y -= alpha * step[1];
                val = cand;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
        val = eval(x, y, &grad, &hess);
    }
    return {x, y};
}

struct RelaxState {
    std::vector<TargetEstimate> targets;
    double sigma = 0.0;
};

// Optimal waveform for target k at the given omega; fixed contributions of
// the other targets are passed in as model matrices restricted to row kind.
CVec solve_waveform(const ObsView& v, const ArrayConfig& config, double omega,
                    const CMat& fixed0, const CMat& fixed1, double sigma,
                    const CVec& warm) {
    const CVec a_col = steering_matrix(config, Vec::Constant(1, omega)).col(0);
    CVec a0(v.m0), a1(v.m1);
    for (int i = 0; i < v.m0; ++i) a0[i] = a_col[v.hi[i]];
    for (int j = 0; j < v.m1; ++j) a1[j] = a_col[v.lo[j]];

    CVec s(v.n);
    for (int nn = 0; nn < v.n; ++nn)
        s[nn] = solve_amplitude(v, a0, a1, fixed0.col(nn), fixed1.col(nn),
                                v.m0 > 0 ? CVec(v.y0->col(nn)) : CVec(0), nn, sigma,
                                warm.size() == v.n ? warm[nn] : cplx(0, 0));
    return s;
}

double partial_nll(const ObsView& v, const ArrayConfig& config, double omega,
                   const CVec& s, const CMat& fixed0, const CMat& fixed1, double sigma) {
    const CVec a_col = steering_matrix(config, Vec::Constant(1, omega)).col(0);
    const double c = kSqrt2 / sigma;
    double nll = 0.0;
    for (int nn = 0; nn < v.n; ++nn) {
        for (int i = 0; i < v.m0; ++i)
            nll += std::norm((*v.y0)(i, nn) - fixed0(i, nn) - a_col[v.hi[i]] * s[nn]) /
                   (sigma * sigma);
        for (int j = 0; j < v.m1; ++j) {
            const cplx z = fixed1(j, nn) + a_col[v.lo[j]] * s[nn];
            nll += neg_log_phi(v.y1r(j, nn) * (z.real() - v.h1r(j, nn)) * c) +
                   neg_log_phi(v.y1i(j, nn) * (z.imag() - v.h1i(j, nn)) * c);
        }
    }
    nll += v.m0 * v.n * (2.0 * std::log(sigma) + std::log(kPi));
    return nll;
}

}  // namespace

RelaxResult relax_refine(const ArrayConfig& config,
                         const std::vector<TargetEstimate>& initial, double sigma_initial,
                         const MixedObservation& observation, double grid_spacing,
                         const RelaxOptions& options) {
    if (initial.empty())
        throw std::invalid_argument("relax_refine: need at least one target");
    const ObsView v(observation);
    const int k = static_cast<int>(initial.size());
    const double half_width = grid_spacing / 2.0;

    RelaxState state{initial, std::max(sigma_initial, 1e-9)};
    double nll = neg_log_likelihood(config, state.targets, state.sigma, observation);

    RelaxResult result;
    for (int cycle = 0; cycle < options.max_cycles; ++cycle) {
        for (int kk = 0; kk < k; ++kk) {
            // Fixed contribution of the other targets at both row kinds.
            CMat fixed0 = CMat::Zero(v.m0, v.n), fixed1 = CMat::Zero(v.m1, v.n);
            for (int jj = 0; jj < k; ++jj) {
                if (jj == kk) continue;
                const CVec col =
                    steering_matrix(config, Vec::Constant(1, state.targets[jj].omega)).col(0);
                for (int i = 0; i < v.m0; ++i)
                    fixed0.row(i) +=
                        col[v.hi[i]] * state.targets[jj].waveform.transpose();
                for (int j = 0; j < v.m1; ++j)
                    fixed1.row(j) +=
                        col[v.lo[j]] * state.targets[jj].waveform.transpose();
            }

            const double w0 = state.targets[kk].omega;
            CVec warm = state.targets[kk].waveform;
            auto profile = [&](double omega) {
                const CVec s =
                    solve_waveform(v, config, omega, fixed0, fixed1, state.sigma, warm);
                return partial_nll(v, config, omega, s, fixed0, fixed1, state.sigma);
            };
            const auto [w_best, f_best] =
                golden_minimize(profile, w0 - half_width, w0 + half_width, 60);
            const double f_center = profile(w0);
            const double w_new = (f_best < f_center) ? w_best : w0;
            state.targets[kk].omega = w_new;
            state.targets[kk].waveform =
                solve_waveform(v, config, w_new, fixed0, fixed1, state.sigma, warm);

            if (kk == 0) {
                // Noise level rides along with the first target.
                auto sigma_obj = [&](double log_sigma) {
                    return partial_nll(v, config, w_new, state.targets[0].waveform,
                                       fixed0, fixed1, std::exp(log_sigma));
                };
                const double ls0 = std::log(state.sigma);
                const auto [ls_best, fs_best] =
                    golden_minimize(sigma_obj, ls0 - 2.0, ls0 + 2.0, 60);
                if (fs_best < sigma_obj(ls0)) state.sigma = std::exp(ls_best);
                state.targets[0].waveform = solve_waveform(
                    v, config, w_new, fixed0, fixed1, state.sigma, state.targets[0].waveform);
            }
        }

        ++result.cycles;
        const double nll_new =
            neg_log_likelihood(config, state.targets, state.sigma, observation);
        const double rel = std::abs(nll - nll_new) / std::max(std::abs(nll), 1e-300);
        nll = std::min(nll, nll_new);
        if (rel < options.eps) break;
    }

    result.targets = std::move(state.targets);
    result.sigma = state.sigma;
    result.neg_log_lik = nll;
    return result;
}

double mbic(double neg_log_lik, int k, int num_elements, int num_snapshots) {
    if (!std::isfinite(neg_log_lik) || k < 0)
        throw std::invalid_argument("mbic: invalid inputs");
    return 2.0 * neg_log_lik +
           (2.0 * k * num_snapshots + 3.0 * k) *
               std::log(static_cast<double>(num_elements) * num_snapshots);
}

ModelSelection slim_relax_mbic(const ArrayConfig& config,
                               const MixedObservation& observation,
                               const AngularGrid& grid, int k_max,
                               const SlimOptions& slim_options,
                               const RelaxOptions& relax_options) {
    if (k_max < 1)
        throw std::invalid_argument("slim_relax_mbic: k_max must be >= 1");
    const SlimResult coarse = slim(config, observation, grid, slim_options);
    const double sigma0 =
        std::clamp(coarse.sigma_hat, 1e-6, 1e6);

    ModelSelection selection;
    selection.spectrum = coarse.spectrum;
    selection.sigma_hat_slim = coarse.sigma_hat;

    // Noise-only hypothesis (K = 0): sigma by 1-D search.
    {
        auto obj = [&](double log_sigma) {
            return neg_log_likelihood(config, {}, std::exp(log_sigma), observation);
        };
        const auto [ls, value] = golden_minimize(obj, std::log(sigma0) - 6.0,
                                                 std::log(sigma0) + 6.0, 80);
        ModelSelection::Candidate cand;
        cand.k = 0;
        cand.neg_log_lik = value;
        cand.mbic_value = mbic(value, 0, static_cast<int>(observation.placement.size()),
                               observation.num_snapshots());
        cand.sigma = std::exp(ls);
        cand.noise_only_extension = true;
        selection.candidates.push_back(std::move(cand));
    }

    for (int k = 1; k <= k_max; ++k) {
        const std::vector<int> picks = peak_pick(coarse.spectrum, k);
        std::vector<TargetEstimate> init;
        init.reserve(k);
        for (int idx : picks)
            init.push_back({grid.omegas[idx], coarse.s_hat.row(idx).transpose()});
        const RelaxResult refined =
            relax_refine(config, init, sigma0, observation, grid.spacing, relax_options);

        ModelSelection::Candidate cand;
        cand.k = k;
        cand.neg_log_lik = refined.neg_log_lik;
        cand.mbic_value =
            mbic(refined.neg_log_lik, k, static_cast<int>(observation.placement.size()),
                 observation.num_snapshots());
        cand.targets = refined.targets;
        cand.sigma = refined.sigma;
        selection.candidates.push_back(std::move(cand));
    }

    const auto best = std::min_element(
        selection.candidates.begin(), selection.candidates.end(),
        [](const auto& lhs, const auto& rhs) {
            if (lhs.mbic_value != rhs.mbic_value) return lhs.mbic_value < rhs.mbic_value;
            return lhs.k < rhs.k;
        });
    selection.chosen_k = best->k;
    return selection;
}

}  // namespace mixadc
