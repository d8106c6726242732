#include "romcut/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace romcut::quadrature {

double Rule2D::total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

void Rule2D::append(const Rule2D& other) {
    points.insert(points.end(), other.points.begin(), other.points.end());
    weights.insert(weights.end(), other.weights.begin(), other.weights.end());
}

Rule1D gauss_legendre(int n) {
    if (n < 1) throw ConfigError("gauss_legendre: need at least one point");
    Rule1D rule;
    rule.points.resize(n);
    rule.weights.resize(n);
    // Newton iteration on P_n over [-1, 1], then map to [0, 1].
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        if (n == 1) p0 = 1.0, p1 = x;
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.points[i] = 0.5 * (1.0 - x);
        rule.points[n - 1 - i] = 0.5 * (1.0 + x);
        rule.weights[i] = 0.5 * w;
        rule.weights[n - 1 - i] = 0.5 * w;
    }
    if (n == 1) {
        rule.points[0] = 0.5;
        rule.weights[0] = 1.0;
    }
    return rule;
}

Rule2D tensor_rule(const Point& lo, const Point& size, int n) {
    const Rule1D g = gauss_legendre(n);
    Rule2D r;
    r.points.reserve(n * n);
    r.weights.reserve(n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            r.points.emplace_back(lo.x() + size.x() * g.points[i], lo.y() + size.y() * g.points[j]);
            r.weights.push_back(size.x() * size.y() * g.weights[i] * g.weights[j]);
        }
    return r;
}

Rule2D triangle_rule(const Point& a, const Point& b, const Point& c, int order) {
    const int n = points_for_order(order + 1);
    const Rule1D g = gauss_legendre(n);
    const Point e1 = b - a;
    const Point e2 = c - a;
    const double area2 = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
    Rule2D r;
    r.points.reserve(n * n);
    r.weights.reserve(n * n);
    for (int i = 0; i < n; ++i) {
        const double u = g.points[i];
        for (int j = 0; j < n; ++j) {
            const double v = g.points[j] * (1.0 - u);
            r.points.push_back(a + u * e1 + v * e2);
            r.weights.push_back(area2 * g.weights[i] * g.weights[j] * (1.0 - u));
        }
    }
    return r;
}

Rule2D segment_rule(const Point& a, const Point& b, int n) {
    const Rule1D g = gauss_legendre(n);
    const double len = (b - a).norm();
    Rule2D r;
    for (int i = 0; i < n; ++i) {
        r.points.push_back(a + g.points[i] * (b - a));
        r.weights.push_back(len * g.weights[i]);
    }
    return r;
}

}  // namespace romcut::quadrature
