#pragma once

// Elastic-net logistic regression via proximal gradient with backtracking.
// Objective: mean logistic loss + lambda * (alpha * L1 + (1-alpha)/2 * L2),
// intercept unpenalized, columns standardized internally on training stats.

#include <cmath>
#include <vector>

#include "gkc/learn_common.hpp"

namespace gkc {

struct LogRegSpec {
    double lambda = 1e-2;
    double alpha = 0.5;  // L1 share of the penalty
    int max_iter = 1000;
    double tol = 1e-7;
};

inline void validate_spec(const LogRegSpec& s) {
    if (s.lambda < 0) throw ConfigError("LogRegEN: lambda must be >= 0");
    if (s.alpha < 0 || s.alpha > 1) throw ConfigError("LogRegEN: alpha must lie in [0,1]");
    if (s.max_iter < 1) throw ConfigError("LogRegEN: max_iter must be >= 1");
    if (s.tol <= 0) throw ConfigError("LogRegEN: tol must be > 0");
}

struct LogRegModel {
    // Weights live in standardized feature space; mu/sigma map raw inputs.
    std::vector<double> weights;
    double intercept = 0.0;
    std::vector<double> mu;
    std::vector<double> sigma;  // 1.0 for degenerate columns
    int iterations = 0;
    double final_objective = 0.0;

    std::size_t width() const { return weights.size(); }

    double margin(const double* row) const {
        double z = intercept;
        for (std::size_t j = 0; j < weights.size(); ++j) {
            if (weights[j] != 0.0) z += weights[j] * (row[j] - mu[j]) / sigma[j];
        }
        return z;
    }

    /// Coefficients mapped back to raw feature space (for attribution).
    std::vector<double> raw_weights() const {
        std::vector<double> w(weights.size());
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = weights[j] / sigma[j];
        return w;
    }
};

// ---------------------------------------------------------------------------
// Objective and gradient on given features (no internal standardization).
// The gradient includes the L1 subgradient term lambda*alpha*sign(w), which
// is the exact derivative wherever no weight is exactly zero.
// ---------------------------------------------------------------------------

inline double logreg_objective(const MatrixView& X, const std::vector<int>& y,
                               const std::vector<double>& w, double b, double lambda,
                               double alpha, const std::vector<std::size_t>& order) {
    const std::size_t n = X.n_rows;
    double loss = 0.0;
    for (std::size_t oi = 0; oi < n; ++oi) {
        std::size_t i = order[oi];
        const double* r = X.row(i);
        double z = b;
        for (std::size_t j = 0; j < X.n_cols; ++j) z += w[j] * r[j];
        // log(1+exp(-y'z)) with y' in {-1,+1}
        loss += log1pexp(y[i] ? -z : z);
    }
    loss /= static_cast<double>(n);
    double l1 = 0.0, l2 = 0.0;
    for (double wj : w) {
        l1 += std::fabs(wj);
        l2 += wj * wj;
    }
    return loss + lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2);
}

inline void logreg_gradient(const MatrixView& X, const std::vector<int>& y,
                            const std::vector<double>& w, double b, double lambda,
                            double alpha, const std::vector<std::size_t>& order,
                            std::vector<double>& grad_w, double& grad_b) {
    const std::size_t n = X.n_rows;
    grad_w.assign(X.n_cols, 0.0);
    grad_b = 0.0;
    for (std::size_t oi = 0; oi < n; ++oi) {
        std::size_t i = order[oi];
        const double* r = X.row(i);
        double z = b;
        for (std::size_t j = 0; j < X.n_cols; ++j) z += w[j] * r[j];
        double resid = sigmoid(z) - (y[i] ? 1.0 : 0.0);
        grad_b += resid;
        for (std::size_t j = 0; j < X.n_cols; ++j) grad_w[j] += resid * r[j];
    }
    double inv_n = 1.0 / static_cast<double>(n);
    grad_b *= inv_n;
    for (std::size_t j = 0; j < X.n_cols; ++j) {
        grad_w[j] = grad_w[j] * inv_n + lambda * (1.0 - alpha) * w[j] +
                    lambda * alpha * (w[j] > 0 ? 1.0 : (w[j] < 0 ? -1.0 : 0.0));
    }
}

namespace detail {

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

}  // namespace detail

/// Trains by proximal gradient with backtracking line search on the smooth
/// part (loss + L2); the L1 term is handled by the soft-threshold prox.
/// Stops when the gradient-map norm drops below tol.
inline LogRegModel train_logreg_en(const MatrixView& X, const std::vector<int>& y,
                                   const LogRegSpec& spec) {
    validate_spec(spec);
    check_two_classes(y);
    const std::size_t n = X.n_rows;
    const std::size_t d = X.n_cols;
    if (n < 2) throw InsufficientDataError("LogRegEN needs at least 2 rows");

    const auto order = canonical_row_order(X, y);

    LogRegModel model;
    model.mu.assign(d, 0.0);
    model.sigma.assign(d, 1.0);
    for (std::size_t oi = 0; oi < n; ++oi) {
        const double* r = X.row(order[oi]);
        for (std::size_t j = 0; j < d; ++j) model.mu[j] += r[j];
    }
    for (std::size_t j = 0; j < d; ++j) model.mu[j] /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (std::size_t oi = 0; oi < n; ++oi) {
        const double* r = X.row(order[oi]);
        for (std::size_t j = 0; j < d; ++j) {
            double c = r[j] - model.mu[j];
            var[j] += c * c;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        double sd = n > 1 ? std::sqrt(var[j] / static_cast<double>(n - 1)) : 0.0;
        model.sigma[j] = sd > 0.0 ? sd : 1.0;
    }

    // Standardized copy (row-major) in canonical order.
    std::vector<double> Z(n * d);
    std::vector<int> yz(n);
    for (std::size_t oi = 0; oi < n; ++oi) {
        const double* r = X.row(order[oi]);
        for (std::size_t j = 0; j < d; ++j) Z[oi * d + j] = (r[j] - model.mu[j]) / model.sigma[j];
        yz[oi] = y[order[oi]];
    }
    MatrixView Zv{Z.data(), n, d};
    std::vector<std::size_t> ident(n);
    for (std::size_t i = 0; i < n; ++i) ident[i] = i;

    double pos_rate = 0.0;
    for (int v : yz) pos_rate += v;
    pos_rate /= static_cast<double>(n);
    pos_rate = std::min(1.0 - 1e-9, std::max(1e-9, pos_rate));

    std::vector<double> w(d, 0.0);
    double b = std::log(pos_rate / (1.0 - pos_rate));

    const double l1_t = spec.lambda * spec.alpha;
    auto smooth = [&](const std::vector<double>& wv, double bv) {
        // loss + L2 only; L1 handled by prox
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* r = Zv.row(i);
            double z = bv;
            for (std::size_t j = 0; j < d; ++j) z += wv[j] * r[j];
            loss += log1pexp(yz[i] ? -z : z);
        }
        loss /= static_cast<double>(n);
        double l2 = 0.0;
        for (double wj : wv) l2 += wj * wj;
        return loss + 0.5 * spec.lambda * (1.0 - spec.alpha) * l2;
    };
    auto smooth_grad = [&](const std::vector<double>& wv, double bv, std::vector<double>& gw,
                           double& gb) {
        gw.assign(d, 0.0);
        gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* r = Zv.row(i);
            double z = bv;
            for (std::size_t j = 0; j < d; ++j) z += wv[j] * r[j];
            double resid = sigmoid(z) - (yz[i] ? 1.0 : 0.0);
            gb += resid;
            for (std::size_t j = 0; j < d; ++j) gw[j] += resid * r[j];
        }
        double inv_n = 1.0 / static_cast<double>(n);
        gb *= inv_n;
        for (std::size_t j = 0; j < d; ++j) {
            gw[j] = gw[j] * inv_n + spec.lambda * (1.0 - spec.alpha) * wv[j];
        }
    };

    std::vector<double> gw(d), w_new(d);
    double eta = 1.0;
    double f_cur = smooth(w, b);
    int it = 0;
    for (; it < spec.max_iter; ++it) {
        double gb;
        smooth_grad(w, b, gw, gb);
        double b_new = 0.0, f_new = 0.0;
        for (;;) {
            for (std::size_t j = 0; j < d; ++j) {
                w_new[j] = detail::soft_threshold(w[j] - eta * gw[j], eta * l1_t);
            }
            b_new = b - eta * gb;
            f_new = smooth(w_new, b_new);
            // sufficient decrease on the smooth part
            double lin = 0.0, quad = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double delta = w_new[j] - w[j];
                lin += gw[j] * delta;
                quad += delta * delta;
            }
            double db = b_new - b;
            lin += gb * db;
            quad += db * db;
            if (f_new <= f_cur + lin + quad / (2.0 * eta) + 1e-15) break;
            eta *= 0.5;
            if (eta < 1e-12) throw NonFiniteError("LogRegEN: line search failed");
        }
        if (!std::isfinite(f_new)) throw NonFiniteError("LogRegEN: objective diverged");

        // gradient map norm = ||(x - prox_step(x)) / eta||
        double gm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double delta = (w[j] - w_new[j]) / eta;
            gm += delta * delta;
        }
        double db = (b - b_new) / eta;
        gm += db * db;
        w.swap(w_new);
        b = b_new;
        f_cur = f_new;
        eta *= 1.25;  // tentative growth; backtracking shrinks as needed
        if (std::sqrt(gm) < spec.tol) {
            ++it;
            break;
        }
    }

    model.weights = std::move(w);
    model.intercept = b;
    model.iterations = it;
    double l1 = 0.0;
    for (double wj : model.weights) l1 += std::fabs(wj);
    model.final_objective = f_cur + l1_t * l1;
    return model;
}

inline std::vector<double> predict_scores(const LogRegModel& model, const MatrixView& X) {
    if (X.n_cols != model.width()) {
        throw DimensionMismatchError("LogRegEN: feature width mismatch");
    }
    std::vector<double> out(X.n_rows);
    for (std::size_t i = 0; i < X.n_rows; ++i) out[i] = sigmoid(model.margin(X.row(i)));
    return out;
}

}  // namespace gkc
