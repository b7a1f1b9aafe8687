// Variational Garrote: sparse regression with Bernoulli selection masks.
//
// Minimizes the beta-eliminated free energy
//   F(m, w) = (M/2) ln[ sum_mu r_mu^2 + sum_mu sum_i m_i(1-m_i)(w_i x_i^mu)^2 ]
//             + sum_i [ m_i ln m_i + (1-m_i) ln(1-m_i) ] - gamma sum_i m_i
// with r_mu = y^mu - sum_i m_i w_i x_i^mu, jointly over (m, w). Masks are
// parameterized as m = sigmoid(a) so the entropy gradient stays finite, and
// the pair (a, w) is driven by Adam (decoupled weight decay fixed to zero)
// under a reduce-on-plateau learning-rate schedule.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vg/core.hpp"
#include "vg/rng.hpp"

namespace vg {

struct VgConfig {
    double gamma = 0.0;          // sparsity pressure; larger favors denser masks
    double lr_init = 0.03;
    double lr_stop = 1e-6;
    double lr_decay_factor = 0.5;
    int plateau_patience = 50;
    long max_iters = 200000;
    double mask_init = 1.0 - 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
};

inline void validate_config(const VgConfig& cfg) {
    if (!(cfg.lr_stop < cfg.lr_init)) throw InvalidInput("vg: lr_stop must be below lr_init");
    if (!(cfg.lr_init > 0.0) || !(cfg.lr_stop > 0.0)) throw InvalidInput("vg: rates must be positive");
    if (!(cfg.lr_decay_factor > 0.0) || !(cfg.lr_decay_factor < 1.0))
        throw InvalidInput("vg: lr_decay_factor must lie in (0, 1)");
    if (!(cfg.mask_init > 0.0) || !(cfg.mask_init < 1.0))
        throw InvalidInput("vg: mask_init must lie strictly in (0, 1)");
    if (cfg.plateau_patience < 1 || cfg.max_iters < 1)
        throw InvalidInput("vg: patience and max_iters must be positive");
}

namespace detail {

// Residual energy denominator D = sum r^2 + sum_i m_i(1-m_i) w_i^2 S_i,
// where S_i is the squared norm of column i.
inline double vg_denominator(const Vector& residual, const Vector& m, const Vector& w,
                             const Vector& col_sq) {
    return residual.squaredNorm() +
           (m.array() * (1.0 - m.array()) * w.array().square() * col_sq.array()).sum();
}

// Partial derivatives of F given precomputed correlations c = x^T r and D.
inline void vg_partials(const Vector& m, const Vector& w, const Vector& c,
                        const Vector& col_sq, double denom, double m_samples, double gamma,
                        Vector& grad_m, Vector& grad_w) {
    const double scale = m_samples / (2.0 * denom);
    grad_w = scale * (-2.0 * m.array() * c.array() +
                      2.0 * m.array() * (1.0 - m.array()) * w.array() * col_sq.array());
    grad_m = scale * (-2.0 * w.array() * c.array() +
                      (1.0 - 2.0 * m.array()) * w.array().square() * col_sq.array()) +
             (m.array() / (1.0 - m.array())).log() - gamma;
}

}  // namespace detail

// F(m, w) for strictly interior masks. Returns -infinity when the log
// argument is not positive (degenerate exact fit).
inline double vg_free_energy(const Dataset& data, const Vector& m, const Vector& w,
                             double gamma) {
    const Eigen::Index n = data.n_features();
    if (m.size() != n || w.size() != n) throw InvalidInput("vg_free_energy: size mismatch");
    if ((m.array() <= 0.0).any() || (m.array() >= 1.0).any())
        throw InvalidInput("vg_free_energy: masks must be strictly inside (0, 1)");

    const Vector col_sq = data.x.colwise().squaredNorm();
    const Vector residual = data.y - data.x * m.cwiseProduct(w).eval();
    const double denom = detail::vg_denominator(residual, m, w, col_sq);
    if (!(denom > 0.0)) return -std::numeric_limits<double>::infinity();

    const double entropy_term =
        (m.array() * m.array().log() + (1.0 - m.array()) * (1.0 - m.array()).log()).sum();
    return 0.5 * static_cast<double>(data.n_samples()) * std::log(denom) + entropy_term -
           gamma * m.sum();
}

// Analytic gradient of F with respect to (m, w). The sigmoid chain rule is
// the caller's responsibility.
inline std::pair<Vector, Vector> vg_gradients(const Dataset& data, const Vector& m,
                                              const Vector& w, double gamma) {
    const Vector col_sq = data.x.colwise().squaredNorm();
    const Vector residual = data.y - data.x * m.cwiseProduct(w).eval();
    const Vector c = data.x.transpose() * residual;
    const double denom = detail::vg_denominator(residual, m, w, col_sq);

    Vector grad_m(m.size()), grad_w(w.size());
    detail::vg_partials(m, w, c, col_sq, denom, static_cast<double>(data.n_samples()), gamma,
                        grad_m, grad_w);
    return {std::move(grad_m), std::move(grad_w)};
}

// f_trace, when given, receives F at every iteration (diagnostics only).
inline FitResult fit_vg(const Dataset& data, const VgConfig& cfg,
                        std::vector<double>* f_trace = nullptr) {
    validate_config(cfg);
    const Eigen::Index m_rows = data.n_samples();
    const Eigen::Index n = data.n_features();
    const double m_count = static_cast<double>(m_rows);

    // Logits are clamped to +-30 so sigmoid(a) and its complement stay
    // representable and mask gradients never vanish exactly.
    constexpr double kLogitCap = 30.0;

    Rng rng(cfg.seed);
    Vector a = Vector::Constant(n, std::log(cfg.mask_init / (1.0 - cfg.mask_init)));
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = rng.normal();

    const Vector col_sq = data.x.colwise().squaredNorm();

    Vector ma = Vector::Zero(n), va = Vector::Zero(n);  // Adam moments for logits
    Vector mw = Vector::Zero(n), vw = Vector::Zero(n);  // Adam moments for weights
    Vector m(n), mask_w(n), residual(m_rows), c(n), grad_m(n), grad_w(n), grad_a(n);

    double lr = cfg.lr_init;
    double best_f = std::numeric_limits<double>::infinity();
    Vector best_a = a, best_w = w;
    double beta1_pow = 1.0, beta2_pow = 1.0;
    int plateau = 0;
    long iter = 0;
    bool converged = false;
    std::string note;

    for (iter = 1; iter <= cfg.max_iters; ++iter) {
        m = (1.0 + (-a.array()).exp()).inverse();
        mask_w = m.cwiseProduct(w);
        residual.noalias() = data.y - data.x * mask_w;
        const double denom = detail::vg_denominator(residual, m, w, col_sq);
        if (denom < 1e-300) {
            note = "degenerate-fit: residual energy collapsed to zero";
            converged = true;
            best_a = a;
            best_w = w;
            best_f = -std::numeric_limits<double>::infinity();
            break;
        }

        // Entropy in logit space: m ln m + (1-m) ln(1-m) = m a - softplus(a),
        // safe without guards since |a| <= kLogitCap keeps exp(a) finite.
        const double entropy_term =
            (m.array() * a.array() - (1.0 + a.array().exp()).log()).sum();
        const double f =
            0.5 * m_count * std::log(denom) + entropy_term - cfg.gamma * m.sum();
        if (f_trace) f_trace->push_back(f);

        if (!std::isfinite(f)) {
            throw NumericalError("vg: non-finite loss at iteration " + std::to_string(iter) +
                                 ", lr=" + std::to_string(lr) +
                                 ", |grad|=" + std::to_string(grad_a.norm() + grad_w.norm()));
        }

        if (f < best_f - 1e-12) {
            best_f = f;
            best_a = a;
            best_w = w;
            plateau = 0;
        } else if (++plateau >= cfg.plateau_patience) {
            lr *= cfg.lr_decay_factor;
            plateau = 0;
            if (lr < cfg.lr_stop) {
                converged = true;
                break;
            }
        }

        c.noalias() = data.x.transpose() * residual;
        // Same partials as detail::vg_partials, but ln(m/(1-m)) is just a here.
        const double scale = m_count / (2.0 * denom);
        grad_w = scale * (-2.0 * m.array() * c.array() +
                          2.0 * m.array() * (1.0 - m.array()) * w.array() * col_sq.array());
        grad_m = scale * (-2.0 * w.array() * c.array() +
                          (1.0 - 2.0 * m.array()) * w.array().square() * col_sq.array()) +
                 a.array() - cfg.gamma;
        grad_a = grad_m.array() * m.array() * (1.0 - m.array());

        beta1_pow *= cfg.adam_beta1;
        beta2_pow *= cfg.adam_beta2;
        const double bc1 = 1.0 - beta1_pow;
        const double bc2 = 1.0 - beta2_pow;
        ma = cfg.adam_beta1 * ma + (1.0 - cfg.adam_beta1) * grad_a;
        va = cfg.adam_beta2 * va.array() + (1.0 - cfg.adam_beta2) * grad_a.array().square();
        mw = cfg.adam_beta1 * mw + (1.0 - cfg.adam_beta1) * grad_w;
        vw = cfg.adam_beta2 * vw.array() + (1.0 - cfg.adam_beta2) * grad_w.array().square();

        a.array() -= lr * (ma.array() / bc1) / ((va.array() / bc2).sqrt() + cfg.adam_eps);
        w.array() -= lr * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + cfg.adam_eps);
        a = a.cwiseMax(-kLogitCap).cwiseMin(kLogitCap);
    }

    FitResult fit;
    fit.solver_id = SolverId::vg;
    fit.reg_strength = cfg.gamma;
    fit.m = (1.0 + (-best_a.array()).exp()).inverse();
    fit.w = best_w;
    fit.rho_model = fit.m.mean();
    fit.loss = best_f;
    fit.iterations = std::min(iter, cfg.max_iters);
    fit.converged = converged;
    fit.note = std::move(note);

    mask_w = fit.m.cwiseProduct(fit.w);
    residual.noalias() = data.y - data.x * mask_w;
    const double denom = detail::vg_denominator(residual, fit.m, fit.w, col_sq);
    fit.beta = m_count / std::max(denom, 1e-300);
    return fit;
}

// Runs the whole gamma grid of one dataset in lockstep, so the two matvecs
// per iteration become matrix products over the still-active fits. Column b
// follows exactly the fit_vg(cfg with gamma=gammas[b], seed=seeds[b])
// schedule; converged columns retire early via swap-removal. A column whose
// loss turns non-finite is reported as std::nullopt instead of aborting its
// siblings.
inline std::vector<std::optional<FitResult>> fit_vg_batch(
    const Dataset& data, const VgConfig& base, const std::vector<double>& gammas,
    const std::vector<std::uint64_t>& seeds) {
    validate_config(base);
    if (gammas.size() != seeds.size())
        throw InvalidInput("fit_vg_batch: gamma/seed count mismatch");
    const int b_total = static_cast<int>(gammas.size());
    std::vector<std::optional<FitResult>> out(gammas.size());
    if (b_total == 0) return out;

    const Eigen::Index m_rows = data.n_samples();
    const Eigen::Index n = data.n_features();
    const double m_count = static_cast<double>(m_rows);
    constexpr double kLogitCap = 30.0;

    const Vector col_sq = data.x.colwise().squaredNorm();
    const double a0 = std::log(base.mask_init / (1.0 - base.mask_init));

    Matrix A = Matrix::Constant(n, b_total, a0), W(n, b_total);
    for (int b = 0; b < b_total; ++b) {
        Rng rng(seeds[static_cast<std::size_t>(b)]);
        for (Eigen::Index i = 0; i < n; ++i) W(i, b) = rng.normal();
    }
    Matrix MA = Matrix::Zero(n, b_total), VA = MA, MW = MA, VW = MA;
    Matrix best_A = A, best_W = W;
    Matrix Msig(n, b_total), MWp(n, b_total), GM(n, b_total), GW(n, b_total), GA(n, b_total);
    Matrix R(m_rows, b_total), C(n, b_total);
    Eigen::RowVectorXd den_row(b_total), f_row(b_total), ent_row(b_total), gamma_row(b_total);

    std::vector<double> lr(gammas.size(), base.lr_init);
    std::vector<double> best_f(gammas.size(), std::numeric_limits<double>::infinity());
    std::vector<int> plateau(gammas.size(), 0), col_of(gammas.size());
    for (int b = 0; b < b_total; ++b) {
        gamma_row(b) = gammas[static_cast<std::size_t>(b)];
        col_of[static_cast<std::size_t>(b)] = b;
    }

    // finalize slot s at iteration t; failed fits produce nullopt
    const auto retire = [&](int s, long t, bool conv, bool failed, const std::string& note_s,
                            double loss_s) {
        const int orig = col_of[static_cast<std::size_t>(s)];
        if (!failed) {
            FitResult fit;
            fit.solver_id = SolverId::vg;
            fit.reg_strength = gammas[static_cast<std::size_t>(orig)];
            fit.m = (1.0 + (-best_A.col(s).array()).exp()).inverse();
            fit.w = best_W.col(s);
            fit.rho_model = fit.m.mean();
            fit.loss = loss_s;
            fit.iterations = std::min(t, base.max_iters);
            fit.converged = conv;
            fit.note = note_s;
            const Vector mw = fit.m.cwiseProduct(fit.w);
            const Vector resid = data.y - data.x * mw;
            fit.beta = m_count /
                       std::max(detail::vg_denominator(resid, fit.m, fit.w, col_sq), 1e-300);
            out[static_cast<std::size_t>(orig)] = std::move(fit);
        }
    };
    // swaps every per-slot buffer, including the ones already computed this
    // iteration (Msig, R, den, f) that later stages still read
    const auto swap_slots = [&](int s, int last) {
        if (s == last) return;
        A.col(s).swap(A.col(last));
        W.col(s).swap(W.col(last));
        MA.col(s).swap(MA.col(last));
        VA.col(s).swap(VA.col(last));
        MW.col(s).swap(MW.col(last));
        VW.col(s).swap(VW.col(last));
        best_A.col(s).swap(best_A.col(last));
        best_W.col(s).swap(best_W.col(last));
        Msig.col(s).swap(Msig.col(last));
        R.col(s).swap(R.col(last));
        std::swap(den_row(s), den_row(last));
        std::swap(f_row(s), f_row(last));
        std::swap(gamma_row(s), gamma_row(last));
        std::swap(lr[static_cast<std::size_t>(s)], lr[static_cast<std::size_t>(last)]);
        std::swap(best_f[static_cast<std::size_t>(s)], best_f[static_cast<std::size_t>(last)]);
        std::swap(plateau[static_cast<std::size_t>(s)], plateau[static_cast<std::size_t>(last)]);
        std::swap(col_of[static_cast<std::size_t>(s)], col_of[static_cast<std::size_t>(last)]);
    };

    int active = b_total;
    double beta1_pow = 1.0, beta2_pow = 1.0;
    long iter = 0;
    for (iter = 1; iter <= base.max_iters && active > 0; ++iter) {
        auto Ab = A.leftCols(active).array();
        auto Wb = W.leftCols(active).array();
        Msig.leftCols(active) = (1.0 + (-Ab).exp()).inverse().matrix();
        auto Mb = Msig.leftCols(active).array();
        MWp.leftCols(active) = (Mb * Wb).matrix();
        R.leftCols(active).noalias() = -(data.x * MWp.leftCols(active));
        R.leftCols(active).colwise() += data.y;

        den_row.head(active) = R.leftCols(active).colwise().squaredNorm();
        den_row.head(active).noalias() +=
            col_sq.transpose() * (Mb * (1.0 - Mb) * Wb.square()).matrix();
        ent_row.head(active) = (Mb * Ab - (1.0 + Ab.exp()).log()).colwise().sum();
        f_row.head(active) = 0.5 * m_count * den_row.head(active).array().log() +
                             ent_row.head(active).array() -
                             gamma_row.head(active).array() *
                                 Msig.leftCols(active).colwise().sum().array();

        // best/plateau bookkeeping and retirement, slot by slot
        for (int s = 0; s < active;) {
            const auto su = static_cast<std::size_t>(s);
            const double den_s = den_row(s);
            const double f = f_row(s);
            if (den_s < 1e-300) {
                best_A.col(s) = A.col(s);
                best_W.col(s) = W.col(s);
                retire(s, iter, true, false, "degenerate-fit: residual energy collapsed to zero",
                       -std::numeric_limits<double>::infinity());
                swap_slots(s, --active);
                continue;
            }
            if (!std::isfinite(f)) {
                retire(s, iter, false, true, "", 0.0);
                swap_slots(s, --active);
                continue;
            }
            if (f < best_f[su] - 1e-12) {
                best_f[su] = f;
                best_A.col(s) = A.col(s);
                best_W.col(s) = W.col(s);
                plateau[su] = 0;
            } else if (++plateau[su] >= base.plateau_patience) {
                lr[su] *= base.lr_decay_factor;
                plateau[su] = 0;
                if (lr[su] < base.lr_stop) {
                    retire(s, iter, true, false, "", best_f[su]);
                    swap_slots(s, --active);
                    continue;
                }
            }
            ++s;
        }
        if (active == 0) break;

        C.leftCols(active).noalias() = data.x.transpose() * R.leftCols(active);
        {
            auto Ab2 = A.leftCols(active).array();
            auto Wb2 = W.leftCols(active).array();
            auto Mb2 = Msig.leftCols(active).array();
            auto Cb = C.leftCols(active).array();
            const auto scale =
                (0.5 * m_count / den_row.head(active).array()).replicate(n, 1);
            GW.leftCols(active) =
                (scale * (-2.0 * Mb2 * Cb + 2.0 * Mb2 * (1.0 - Mb2) * Wb2 *
                                                col_sq.array().replicate(1, active))).matrix();
            GM.leftCols(active) =
                (scale * (-2.0 * Wb2 * Cb + (1.0 - 2.0 * Mb2) * Wb2.square() *
                                                col_sq.array().replicate(1, active)) +
                 Ab2 - gamma_row.head(active).array().replicate(n, 1)).matrix();
            GA.leftCols(active) = (GM.leftCols(active).array() * Mb2 * (1.0 - Mb2)).matrix();
        }

        beta1_pow *= base.adam_beta1;
        beta2_pow *= base.adam_beta2;
        const double bc1 = 1.0 - beta1_pow;
        const double bc2 = 1.0 - beta2_pow;
        MA.leftCols(active) = base.adam_beta1 * MA.leftCols(active) +
                              (1.0 - base.adam_beta1) * GA.leftCols(active);
        VA.leftCols(active).array() = base.adam_beta2 * VA.leftCols(active).array() +
                                      (1.0 - base.adam_beta2) * GA.leftCols(active).array().square();
        MW.leftCols(active) = base.adam_beta1 * MW.leftCols(active) +
                              (1.0 - base.adam_beta1) * GW.leftCols(active);
        VW.leftCols(active).array() = base.adam_beta2 * VW.leftCols(active).array() +
                                      (1.0 - base.adam_beta2) * GW.leftCols(active).array().square();
        for (int s = 0; s < active; ++s) {
            const double step = lr[static_cast<std::size_t>(s)];
            A.col(s).array() -= step * (MA.col(s).array() / bc1) /
                                ((VA.col(s).array() / bc2).sqrt() + base.adam_eps);
            W.col(s).array() -= step * (MW.col(s).array() / bc1) /
                                ((VW.col(s).array() / bc2).sqrt() + base.adam_eps);
        }
        A.leftCols(active) = A.leftCols(active).cwiseMax(-kLogitCap).cwiseMin(kLogitCap);
    }

    // columns that exhausted the budget
    for (int s = active - 1; s >= 0; --s) retire(s, base.max_iters, false, false, "", best_f[static_cast<std::size_t>(s)]);
    return out;
}

}  // namespace vg
