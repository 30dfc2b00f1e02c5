#pragma once

// Adaptive integrators for y' = f(t, y) with dense output.
//
//  * DormandPrince54: explicit embedded RK 5(4) with Hairer's 4th-order
//    continuous extension.
//  * RadauIIA5: 3-stage Radau IIA (order 5, L-stable) for linear systems
//    y' = A(t) y, with step-doubling error control and the collocation
//    polynomial as dense output.
//
// Both integrate forward or backward in t and report the state at a list
// of output abscissae ordered along the direction of integration.

#include "adiabatic/errors.hpp"
#include "adiabatic/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace adiabatic {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double initial_step = 0.0;  // 0: automatic
    double max_step = 0.0;      // 0: unbounded
    long max_steps = 20'000'000;
};

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evaluations = 0;
};

struct OdeResult {
    std::vector<Vector> values;  // one per output abscissa
    OdeStats stats;
};

namespace detail {

inline double error_norm(const Vector& err, const Vector& y0, const Vector& y1, const OdeOptions& opt) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double scale = opt.atol + opt.rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        const double r = std::abs(err(i)) / scale;
        acc += r * r;
    }
    return std::sqrt(acc / std::max<Eigen::Index>(1, err.size()));
}

inline void check_outputs(double t0, double t1, std::span<const double> outputs) {
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    double prev = t0;
    for (double t : outputs) {
        if (dir * (t - prev) < -1e-14 || dir * (t1 - t) < -1e-14)
            throw std::invalid_argument("ODE outputs must be ordered within the integration interval");
        prev = t;
    }
}

}  // namespace detail

using OdeRhs = std::function<Vector(double, const Vector&)>;

class DormandPrince54 {
public:
    explicit DormandPrince54(OdeOptions options = {}) : opt_(options) {}

    OdeResult integrate(const OdeRhs& f, double t0, const Vector& y0, double t1,
                        std::span<const double> outputs) const {
        detail::check_outputs(t0, t1, outputs);
        OdeResult result;
        result.values.reserve(outputs.size());
        std::size_t next = 0;
        const double dir = t1 >= t0 ? 1.0 : -1.0;
        const double span = std::abs(t1 - t0);

        auto emit_at_start = [&](const Vector& y, double t) {
            while (next < outputs.size() && std::abs(outputs[next] - t) <= 1e-15 * std::max(1.0, std::abs(t))) {
                result.values.push_back(y);
                ++next;
            }
        };

        Vector y = y0;
        double t = t0;
        emit_at_start(y, t);
        if (span == 0.0) {
            while (next < outputs.size()) result.values.push_back(y), ++next;
            return result;
        }

        Vector k1 = f(t, y);
        ++result.stats.rhs_evaluations;
        double h = opt_.initial_step > 0.0 ? opt_.initial_step : initial_step(f, t, y, k1, dir, result.stats);
        h = std::min(h, span);
        if (opt_.max_step > 0.0) h = std::min(h, opt_.max_step);

        const double h_floor = 1e-14 * std::max(1.0, std::max(std::abs(t0), std::abs(t1)));
        long steps = 0;
        while (dir * (t1 - t) > 0.0) {
            if (++steps > opt_.max_steps)
                throw StepUnderflow("Dormand-Prince: step budget exhausted at t=" + std::to_string(t));
            bool last = false;
            if (h >= std::abs(t1 - t)) {
                h = std::abs(t1 - t);
                last = true;
            }
            const double hs = dir * h;
            Vector k2 = f(t + c2 * hs, y + hs * (a21 * k1));
            Vector k3 = f(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
            Vector k4 = f(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
            Vector k5 = f(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            Vector k6 = f(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            Vector y1 = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            Vector k7 = f(t + hs, y1);
            result.stats.rhs_evaluations += 6;
            Vector err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            const double en = detail::error_norm(err, y, y1, opt_);
            if (!std::isfinite(en)) throw StepUnderflow("Dormand-Prince: non-finite state");

            if (en <= 1.0) {
                ++result.stats.accepted;
                const double t_new = last ? t1 : t + hs;
                if (next < outputs.size() && dir * (outputs[next] - t_new) <= 0.0) {
                    // Continuous extension coefficients.
                    const Vector ydiff = y1 - y;
                    const Vector bspl = hs * k1 - ydiff;
                    const Vector r4 = ydiff - hs * k7 - bspl;
                    const Vector r5 = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
                    while (next < outputs.size() && dir * (outputs[next] - t_new) <= 0.0) {
                        const double th = (outputs[next] - t) / hs;
                        const double th1 = 1.0 - th;
                        result.values.push_back(y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5))));
                        ++next;
                    }
                }
                y = std::move(y1);
                t = t_new;
                k1 = std::move(k7);
                const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
                h *= fac;
            } else {
                ++result.stats.rejected;
                h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
            }
            if (opt_.max_step > 0.0) h = std::min(h, opt_.max_step);
            if (h < h_floor && dir * (t1 - t) > h_floor)
                throw StepUnderflow("Dormand-Prince: step size underflow at t=" + std::to_string(t));
        }
        while (next < outputs.size()) result.values.push_back(y), ++next;
        return result;
    }

private:
    double initial_step(const OdeRhs& f, double t, const Vector& y, const Vector& k1, double dir,
                        OdeStats& stats) const {
        // Hairer & Wanner, II.4 starting step heuristic.
        auto scaled = [&](const Vector& v) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                const double sc = opt_.atol + opt_.rtol * std::abs(y(i));
                acc += std::norm(v(i)) / (sc * sc);
            }
            return std::sqrt(acc / std::max<Eigen::Index>(1, v.size()));
        };
        const double dnf = scaled(k1);
        const double dny = scaled(y);
        double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
        const Vector k2 = f(t + dir * h, y + dir * h * k1);
        ++stats.rhs_evaluations;
        const double der2 = scaled(k2 - k1) / h;
        const double der = std::max(der2, dnf);
        const double h1 = der <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der, 0.2);
        return std::min(100.0 * h, h1);
    }

    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                            a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    OdeOptions opt_;
};

/// Coefficient matrix A(t) of a linear system y' = A(t) y.
using LinearCoefficient = std::function<Matrix(double)>;

class RadauIIA5 {
public:
    explicit RadauIIA5(OdeOptions options = {}) : opt_(options) {}

    OdeResult integrate(const LinearCoefficient& a, double t0, const Vector& y0, double t1,
                        std::span<const double> outputs) const {
        detail::check_outputs(t0, t1, outputs);
        OdeResult result;
        result.values.reserve(outputs.size());
        std::size_t next = 0;
        const double dir = t1 >= t0 ? 1.0 : -1.0;
        const double span = std::abs(t1 - t0);
        Vector y = y0;
        double t = t0;
        while (next < outputs.size() && std::abs(outputs[next] - t0) <= 1e-15) result.values.push_back(y), ++next;
        if (span == 0.0) {
            while (next < outputs.size()) result.values.push_back(y), ++next;
            return result;
        }
        double h = opt_.initial_step > 0.0 ? opt_.initial_step : 1e-3 * span;
        const double h_floor = 1e-14 * std::max(1.0, std::max(std::abs(t0), std::abs(t1)));
        long steps = 0;
        while (dir * (t1 - t) > 0.0) {
            if (++steps > opt_.max_steps) throw StepUnderflow("Radau IIA: step budget exhausted");
            bool last = false;
            if (h >= std::abs(t1 - t)) {
                h = std::abs(t1 - t);
                last = true;
            }
            // Steps end on output points: the collocation interpolant is only
            // third order inside a step.
            double h_saved = 0.0;
            if (!last && next < outputs.size() && std::abs(outputs[next] - t) < h) {
                h_saved = h;
                h = std::abs(outputs[next] - t);
            }
            const double hs = dir * h;
            Stage full = step(a, t, y, hs);
            Stage half1 = step(a, t, y, 0.5 * hs);
            Stage half2 = step(a, t + 0.5 * hs, half1.y_end, 0.5 * hs);
            result.stats.rhs_evaluations += 9;
            const Vector err = (half2.y_end - full.y_end) / 31.0;
            const double en = detail::error_norm(err, y, half2.y_end, opt_);
            if (!std::isfinite(en)) throw StepUnderflow("Radau IIA: non-finite state");
            if (en <= 1.0) {
                ++result.stats.accepted;
                const double t_new = last ? t1 : t + hs;
                while (next < outputs.size() && dir * (outputs[next] - t_new) <= 0.0) {
                    const double tau = outputs[next];
                    if (dir * (tau - (t + 0.5 * hs)) <= 0.0)
                        result.values.push_back(dense(half1, y, t, 0.5 * hs, tau));
                    else
                        result.values.push_back(dense(half2, half1.y_end, t + 0.5 * hs, 0.5 * hs, tau));
                    ++next;
                }
                y = half2.y_end;
                t = t_new;
                h *= en == 0.0 ? 4.0 : std::clamp(0.9 * std::pow(en, -1.0 / 6.0), 0.2, 4.0);
                if (h_saved > h) h = h_saved;
            } else {
                ++result.stats.rejected;
                h *= std::clamp(0.9 * std::pow(en, -1.0 / 6.0), 0.1, 0.9);
            }
            if (opt_.max_step > 0.0) h = std::min(h, opt_.max_step);
            if (h < h_floor && dir * (t1 - t) > h_floor) throw StepUnderflow("Radau IIA: step size underflow");
        }
        while (next < outputs.size()) result.values.push_back(y), ++next;
        return result;
    }

private:
    struct Stage {
        Vector y1, y2, y3;
        Vector y_end;
    };

    static Stage step(const LinearCoefficient& a, double t, const Vector& y, double h) {
        const double s6 = std::sqrt(6.0);
        const double c[3] = {(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0};
        const double A[3][3] = {{(88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0},
                                {(296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0},
                                {(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0}};
        const Eigen::Index n = y.size();
        const Matrix mats[3] = {a(t + c[0] * h), a(t + c[1] * h), a(t + c[2] * h)};
        Matrix sys = Matrix::Identity(3 * n, 3 * n);
        Vector rhs(3 * n);
        for (int i = 0; i < 3; ++i) {
            rhs.segment(i * n, n) = y;
            for (int j = 0; j < 3; ++j) sys.block(i * n, j * n, n, n) -= h * A[i][j] * mats[j];
        }
        const Vector stages = sys.partialPivLu().solve(rhs);
        Stage st{stages.segment(0, n), stages.segment(n, n), stages.segment(2 * n, n), {}};
        st.y_end = st.y3;
        return st;
    }

    static Vector dense(const Stage& st, const Vector& y0, double t, double h, double tau) {
        // Lagrange collocation polynomial through (0, y0), (c_i, Y_i).
        const double s6 = std::sqrt(6.0);
        const double nodes[4] = {0.0, (4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0};
        const Vector* vals[4] = {&y0, &st.y1, &st.y2, &st.y3};
        const double x = (tau - t) / h;
        Vector out = Vector::Zero(y0.size());
        for (int i = 0; i < 4; ++i) {
            double l = 1.0;
            for (int j = 0; j < 4; ++j)
                if (j != i) l *= (x - nodes[j]) / (nodes[i] - nodes[j]);
            out += l * (*vals[i]);
        }
        return out;
    }

    OdeOptions opt_;
};

}  // namespace adiabatic
