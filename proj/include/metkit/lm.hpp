#pragma once

// Levenberg-Marquardt least squares with a central-difference Jacobian and
// box bounds. A parameter whose bounds coincide is held fixed.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metkit/error.hpp"

namespace metkit::fit {

struct Parameter {
    std::string name;
    double value = 0.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    double scale = 0.0;  // finite-difference scale; 0 picks |value| or 1

    [[nodiscard]] bool fixed() const { return lower == upper; }
};

/// Evaluates the model at every abscissa in one call.
using VectorModel =
    std::function<void(std::span<const double> x, std::span<const double> params, std::span<double> out)>;

/// Pointwise model, wrapped into a VectorModel by lm_fit.
using ScalarModel = std::function<double(double x, std::span<const double> params)>;

struct LmOptions {
    int max_iterations = 200;
    double ftol = 1e-12;       // relative chi2 reduction
    double xtol = 1e-12;       // relative parameter step
    double gtol = 1e-10;       // max cosine between residual and Jacobian columns
    double gtol_stalled = 1e-4;  // looser gradient test once ftol/xtol trip
    double noise_floor = 1e-12;  // chi2 / sum(y^2) treated as model evaluation noise
    double fd_step = 1e-6;
    double initial_lambda = 1e-3;
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> errors;  // one standard error per parameter, NaN if unavailable
    double chi2 = 0.0;
    int dof = 0;
    bool converged = false;
    bool singular = false;
    int iterations = 0;
    double gradient = 0.0;  // max |cos| between residual and a Jacobian column
    std::string message;

    [[nodiscard]] std::size_t index(std::string_view name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return i;
        throw ValidationError("no fit parameter named '" + std::string(name) + "'");
    }
    [[nodiscard]] double value(std::string_view name) const { return values[index(name)]; }
    [[nodiscard]] double error(std::string_view name) const { return errors[index(name)]; }
};

namespace detail {

class Problem {
public:
    Problem(const VectorModel& model, std::span<const double> x, std::span<const double> y)
        : model_(model), x_(x), y_(y), buffer_(x.size()) {}

    double chi2(std::span<const double> params, std::span<double> residual) {
        model_(x_, params, buffer_);
        double sum = 0.0;
        for (std::size_t i = 0; i < y_.size(); ++i) {
            residual[i] = y_[i] - buffer_[i];
            sum += residual[i] * residual[i];
        }
        return sum;
    }

    void eval(std::span<const double> params, std::span<double> out) { model_(x_, params, out); }

    [[nodiscard]] std::size_t size() const { return y_.size(); }

private:
    const VectorModel& model_;
    std::span<const double> x_;
    std::span<const double> y_;
    std::vector<double> buffer_;
};

}  // namespace detail

inline FitResult lm_fit(const VectorModel& model, std::span<const double> x, std::span<const double> y,
                        std::vector<Parameter> params, const LmOptions& opt = {}) {
    metkit::detail::require(x.size() == y.size(), "x and y must have equal length");
    metkit::detail::require(!params.empty(), "at least one parameter is required");
    for (const auto& p : params) {
        metkit::detail::require(p.lower <= p.upper, "parameter '" + p.name + "' has inverted bounds");
        metkit::detail::require(std::isfinite(p.value) && p.value >= p.lower && p.value <= p.upper,
                                "initial value of '" + p.name + "' lies outside its bounds");
    }

    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < params.size(); ++i)
        if (!params[i].fixed()) free.push_back(i);
    const std::size_t n = y.size();
    const std::size_t m = free.size();
    metkit::detail::require(n >= m, "fewer data points than free parameters");

    std::vector<double> scale(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        scale[i] = params[i].scale > 0.0 ? params[i].scale : (params[i].value != 0.0 ? std::abs(params[i].value) : 1.0);
    }

    detail::Problem problem(model, x, y);
    std::vector<double> p(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) p[i] = params[i].value;

    std::vector<double> residual(n), trial_residual(n), plus(n), minus(n);
    double chi2 = problem.chi2(p, residual);

    Eigen::MatrixXd jac(n, m);
    auto jacobian = [&] {
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = free[k];
            const double h = opt.fd_step * (std::abs(p[i]) + scale[i]);
            double up = std::min(p[i] + h, params[i].upper);
            double down = std::max(p[i] - h, params[i].lower);
            std::vector<double> q = p;
            q[i] = up;
            problem.eval(q, plus);
            q[i] = down;
            problem.eval(q, minus);
            const double width = up - down;
            for (std::size_t r = 0; r < n; ++r) jac(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = (plus[r] - minus[r]) / width;
        }
    };
    // A parameter sitting on a bound whose descent direction points outward
    // is held for the step and left out of the stationarity test.
    auto pinned = [&] {
        const Eigen::Map<const Eigen::VectorXd> r(residual.data(), static_cast<Eigen::Index>(n));
        const Eigen::VectorXd g = jac.transpose() * r;
        std::vector<bool> out(m, false);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = free[k];
            const double gk = g(static_cast<Eigen::Index>(k));
            out[k] = (p[i] <= params[i].lower && gk < 0.0) || (p[i] >= params[i].upper && gk > 0.0);
        }
        return out;
    };
    auto gradient_cosine = [&] {
        const Eigen::Map<const Eigen::VectorXd> r(residual.data(), static_cast<Eigen::Index>(n));
        const double rnorm = r.norm();
        if (rnorm == 0.0) return 0.0;
        const auto held = pinned();
        double worst = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            if (held[k]) continue;
            const auto col = jac.col(static_cast<Eigen::Index>(k));
            const double cnorm = col.norm();
            if (cnorm == 0.0) continue;
            worst = std::max(worst, std::abs(col.dot(r)) / (cnorm * rnorm));
        }
        return worst;
    };

    FitResult result;
    for (const auto& prm : params) result.names.push_back(prm.name);
    result.dof = static_cast<int>(n) - static_cast<int>(m);

    double signal = 0.0;
    for (double v : y) signal += v * v;
    const double floor_chi2 = opt.noise_floor * signal;

    double lambda = opt.initial_lambda;
    int iterations = 0;
    bool converged = m == 0 || chi2 == 0.0;
    std::string message = converged ? "exact fit at initial parameters" : "";
    bool stalled = false;
    if (m > 0) jacobian();

    while (!converged && iterations < opt.max_iterations) {
        const double cosine = gradient_cosine();
        if (cosine <= opt.gtol || (stalled && cosine <= opt.gtol_stalled)) {
            converged = true;
            message = stalled ? "relative reduction below tolerance" : "gradient below tolerance";
            break;
        }
        if (stalled && chi2 <= floor_chi2) {
            converged = true;
            message = "residual at model evaluation noise";
            break;
        }
        if (stalled) {
            message = "stalled away from a stationary point";
            break;
        }
        const Eigen::Map<const Eigen::VectorXd> r(residual.data(), static_cast<Eigen::Index>(n));
        const auto held = pinned();
        Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd jtr = jac.transpose() * r;
        for (std::size_t k = 0; k < m; ++k) {
            if (!held[k]) continue;
            const auto kk = static_cast<Eigen::Index>(k);
            jtj.row(kk).setZero();
            jtj.col(kk).setZero();
            jtj(kk, kk) = 1.0;
            jtr(kk) = 0.0;
        }

        bool accepted = false;
        while (lambda < 1e16) {
            Eigen::MatrixXd a = jtj;
            for (Eigen::Index k = 0; k < a.rows(); ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-300);
            const Eigen::VectorXd step = a.ldlt().solve(jtr);
            // Linearized chi2 decrease; once it is negligible no damping can help.
            const double predicted = 2.0 * step.dot(jtr) - step.dot(jtj * step);
            // Negligible predicted gain: still try the step once (it is free and
            // lands linear problems exactly), then stop.
            const bool negligible = predicted <= opt.ftol * chi2;
            if (!(predicted > 0.0)) {
                stalled = true;
                break;
            }
            std::vector<double> trial = p;
            double largest_rel = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                const std::size_t i = free[k];
                trial[i] = std::clamp(p[i] + step(static_cast<Eigen::Index>(k)), params[i].lower, params[i].upper);
                largest_rel = std::max(largest_rel, std::abs(trial[i] - p[i]) / (std::abs(p[i]) + opt.xtol * scale[i]));
            }
            const double trial_chi2 = problem.chi2(trial, trial_residual);
            if (std::isfinite(trial_chi2) && trial_chi2 < chi2) {
                const double reduction = (chi2 - trial_chi2) / chi2;
                p = std::move(trial);
                residual.swap(trial_residual);
                chi2 = trial_chi2;
                lambda = std::max(lambda / 10.0, 1e-15);
                ++iterations;
                accepted = true;
                if (chi2 == 0.0) {
                    converged = true;
                    message = "exact fit";
                } else if (negligible || reduction <= opt.ftol || largest_rel <= opt.xtol) {
                    stalled = true;
                }
                break;
            }
            if (negligible || largest_rel <= opt.xtol) {
                // Step is already below parameter resolution; nothing left to gain.
                stalled = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!converged) jacobian();
        if (!accepted && !stalled) {
            message = "damping exhausted without reducing chi2";
            stalled = true;
        }
    }
    if (!converged && message.empty()) message = "iteration cap reached";

    result.values = p;
    result.chi2 = chi2;
    result.iterations = iterations;
    result.converged = converged;
    result.gradient = m > 0 ? gradient_cosine() : 0.0;
    result.message = message;

    // Covariance from the column-scaled normal matrix.
    result.errors.assign(params.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].fixed()) result.errors[i] = 0.0;
    std::vector<std::size_t> cols;  // free parameters not pinned at a bound
    if (m > 0) {
        const auto held = pinned();
        for (std::size_t k = 0; k < m; ++k)
            if (!held[k]) cols.push_back(k);
    }
    if (!cols.empty()) {
        const auto mc = static_cast<Eigen::Index>(cols.size());
        Eigen::MatrixXd sub(static_cast<Eigen::Index>(n), mc);
        for (Eigen::Index c = 0; c < mc; ++c) sub.col(c) = jac.col(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(c)]));
        Eigen::VectorXd norms(mc);
        for (Eigen::Index c = 0; c < mc; ++c) norms(c) = sub.col(c).norm();
        if ((norms.array() == 0.0).any()) {
            result.singular = true;
        } else {
            const Eigen::MatrixXd scaled = sub * norms.cwiseInverse().asDiagonal();
            const Eigen::MatrixXd normal = scaled.transpose() * scaled;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal);
            const double smallest = eig.eigenvalues().minCoeff();
            const double largest = eig.eigenvalues().maxCoeff();
            if (!(smallest > 1e-13 * largest)) {
                result.singular = true;
            } else {
                const Eigen::MatrixXd inv = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                                            eig.eigenvectors().transpose();
                const double sigma2 = result.dof > 0 ? chi2 / result.dof : 0.0;
                for (Eigen::Index c = 0; c < mc; ++c)
                    result.errors[free[cols[static_cast<std::size_t>(c)]]] = std::sqrt(inv(c, c) * sigma2) / norms(c);
            }
        }
        if (result.singular && result.message.find("singular") == std::string::npos)
            result.message += "; singular normal matrix";
    }
    return result;
}

inline FitResult lm_fit(const ScalarModel& model, std::span<const double> x, std::span<const double> y,
                        std::vector<Parameter> params, const LmOptions& opt = {}) {
    const VectorModel vector_model = [&model](std::span<const double> xs, std::span<const double> p,
                                              std::span<double> out) {
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = model(xs[i], p);
    };
    return lm_fit(vector_model, x, y, std::move(params), opt);
}

}  // namespace metkit::fit
