#pragma once

// Chebyshev-Lobatto collocation on [0, 1]: nodes, spectral differentiation,
// barycentric interpolation and cumulative (Clenshaw-Curtis) integration.
//
// Nodes are ascending, s_k = (1 - cos(k pi / n)) / 2 for k = 0..n, so that
// s_0 = 0 and s_n = 1. Vector-valued samples are stored column-wise: column k
// holds the value at node k.

#include "adiabatic/linalg.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace adiabatic {

class ChebyshevGrid {
public:
    explicit ChebyshevGrid(int num_nodes) : m_(num_nodes) {
        if (num_nodes < 2) throw std::invalid_argument("ChebyshevGrid needs at least 2 nodes");
        const int n = m_ - 1;
        nodes_.resize(m_);
        x_.resize(m_);
        weights_.resize(m_);
        for (int k = 0; k < m_; ++k) {
            x_(k) = -std::cos(pi * k / n);
            nodes_(k) = 0.5 * (1.0 + x_(k));
            weights_(k) = (k % 2 == 0 ? 1.0 : -1.0) * ((k == 0 || k == n) ? 0.5 : 1.0);
        }
        // Pin the endpoints exactly.
        nodes_(0) = 0.0;
        nodes_(n) = 1.0;
        build_differentiation();
        build_transform();
        build_integration();
    }

    int size() const { return m_; }
    const RealVector& nodes() const { return nodes_; }
    double node(int k) const { return nodes_(k); }

    /// d/ds on [0, 1].
    const RealMatrix& differentiation() const { return diff_; }
    /// Row k integrates from 0 to s_k.
    const RealMatrix& integration() const { return integ_; }
    /// Clenshaw-Curtis weights for the full interval.
    RealVector quadrature_weights() const { return integ_.row(m_ - 1).transpose(); }
    /// Node values -> Chebyshev coefficients.
    const RealMatrix& to_coefficients() const { return coeff_; }

    /// Barycentric interpolation weights at s; returns the index of a node
    /// if s coincides with one (then the weights are a unit vector).
    RealVector interpolation_weights(double s) const {
        RealVector w = RealVector::Zero(m_);
        for (int k = 0; k < m_; ++k) {
            if (std::abs(s - nodes_(k)) < 1e-15) {
                w(k) = 1.0;
                return w;
            }
        }
        double denom = 0.0;
        for (int k = 0; k < m_; ++k) {
            w(k) = weights_(k) / (s - nodes_(k));
            denom += w(k);
        }
        return w / denom;
    }

    /// Differentiate column-stored samples (rows = components).
    template <typename Derived>
    auto differentiate(const Eigen::MatrixBase<Derived>& samples) const {
        return (samples * diff_.transpose().cast<typename Derived::Scalar>()).eval();
    }

    template <typename Derived>
    auto integrate_cumulative(const Eigen::MatrixBase<Derived>& samples) const {
        return (samples * integ_.transpose().cast<typename Derived::Scalar>()).eval();
    }

    template <typename Derived>
    auto interpolate(const Eigen::MatrixBase<Derived>& samples, double s) const {
        return (samples * interpolation_weights(s).cast<typename Derived::Scalar>()).eval();
    }

    /// Relative magnitude of the trailing quarter of Chebyshev coefficients,
    /// a resolution indicator (small means the samples are resolved).
    template <typename Derived>
    double tail_ratio(const Eigen::MatrixBase<Derived>& samples, double floor = 0.0) const {
        const auto coeffs = (samples * coeff_.transpose().cast<typename Derived::Scalar>()).eval();
        const int tail = std::max(2, m_ / 4);
        double head = 0.0, rear = 0.0;
        for (int k = 0; k < m_; ++k) {
            const double c = coeffs.col(k).cwiseAbs().maxCoeff();
            head = std::max(head, c);
            if (k >= m_ - tail) rear = std::max(rear, c);
        }
        head = std::max(head, floor);
        return head > 0.0 ? rear / head : 0.0;
    }

private:
    void build_differentiation() {
        const int n = m_ - 1;
        diff_ = RealMatrix::Zero(m_, m_);
        auto c = [n](int k) { return (k == 0 || k == n) ? 2.0 : 1.0; };
        for (int i = 0; i < m_; ++i) {
            double row = 0.0;
            for (int j = 0; j < m_; ++j) {
                if (i == j) continue;
                const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
                diff_(i, j) = (c(i) / c(j)) * sign / (x_(i) - x_(j));
                row += diff_(i, j);
            }
            diff_(i, i) = -row;
        }
        diff_ *= 2.0;  // dx/ds = 2
    }

    void build_transform() {
        const int n = m_ - 1;
        coeff_ = RealMatrix::Zero(m_, m_);
        for (int k = 0; k <= n; ++k) {
            for (int j = 0; j <= n; ++j) {
                // x_j = cos((n - j) pi / n)
                double t = std::cos(pi * k * (n - j) / n);
                if (j == 0 || j == n) t *= 0.5;
                coeff_(k, j) = 2.0 / n * t;
            }
            if (k == 0 || k == n) coeff_.row(k) *= 0.5;
        }
    }

    void build_integration() {
        const int n = m_ - 1;
        // Antiderivative coefficients (degree n + 1) of each Chebyshev mode.
        RealMatrix anti = RealMatrix::Zero(n + 2, m_);
        for (int k = 0; k <= n; ++k) {
            RealVector a = RealVector::Zero(n + 2);
            if (k == 0) {
                a(1) = 1.0;
            } else if (k == 1) {
                a(2) = 0.25;
            } else {
                a(k + 1) += 1.0 / (2.0 * (k + 1));
                a(k - 1) -= 1.0 / (2.0 * (k - 1));
            }
            anti.col(k) = a;
        }
        // Evaluate the antiderivative at the nodes minus its value at x = -1.
        RealMatrix eval(m_, n + 2);
        for (int j = 0; j < m_; ++j)
            for (int k = 0; k <= n + 1; ++k)
                eval(j, k) = std::cos(k * std::acos(std::clamp(x_(j), -1.0, 1.0))) -
                             ((k % 2 == 0) ? 1.0 : -1.0);
        integ_ = 0.5 * eval * anti * coeff_;  // ds = dx / 2
    }

    int m_;
    RealVector nodes_;
    RealVector x_;
    RealVector weights_;
    RealMatrix diff_;
    RealMatrix coeff_;
    RealMatrix integ_;
};

/// Shared grids keyed by size; construction is O(M^3).
inline std::shared_ptr<const ChebyshevGrid> chebyshev_grid(int num_nodes) {
    return std::make_shared<const ChebyshevGrid>(num_nodes);
}

}  // namespace adiabatic
