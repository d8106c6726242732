#include "romcut/lagrange.hpp"

#include <array>

namespace romcut::lagrange {

void basis_1d(int p, double t, double* values, double* derivs) {
    if (p < 1) throw ConfigError("Lagrange order must be >= 1");
    std::array<double, 16> nodes{};
    for (int k = 0; k <= p; ++k) nodes[k] = static_cast<double>(k) / p;
    for (int k = 0; k <= p; ++k) {
        double v = 1.0;
        double denom = 1.0;
        for (int m = 0; m <= p; ++m) {
            if (m == k) continue;
            v *= t - nodes[m];
            denom *= nodes[k] - nodes[m];
        }
        values[k] = v / denom;
        if (derivs) {
            double d = 0.0;
            for (int s = 0; s <= p; ++s) {
                if (s == k) continue;
                double prod = 1.0;
                for (int m = 0; m <= p; ++m) {
                    if (m == k || m == s) continue;
                    prod *= t - nodes[m];
                }
                d += prod;
            }
            derivs[k] = d / denom;
        }
    }
}

void ShapeQp::evaluate(double xi, double eta) {
    std::array<double, 16> vx{}, dx{}, vy{}, dy{};
    basis_1d(p, xi, vx.data(), dx.data());
    basis_1d(p, eta, vy.data(), dy.data());
    const int n1 = p + 1;
    for (int b = 0; b < n1; ++b)
        for (int a = 0; a < n1; ++a) {
            const int i = a + n1 * b;
            values[i] = vx[a] * vy[b];
            grads(0, i) = dx[a] * vy[b];
            grads(1, i) = vx[a] * dy[b];
        }
}

}  // namespace romcut::lagrange
