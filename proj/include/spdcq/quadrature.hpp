#pragma once

#include <cstddef>
#include <vector>

namespace spdcq {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussLegendreRule gauss_legendre(int order);

struct AngularNode {
    double theta;
    double phi;
    double weight;  // solid-angle weight, sr
};

/// Tensor-product quadrature over the spherical cap theta in [0, theta_max]:
/// Gauss-Legendre in cos(theta) times uniform (periodic trapezoid) nodes in
/// phi. Sum of weights equals the cap solid angle 2*pi*(1 - cos(theta_max)).
struct AngularQuadrature {
    double theta_max = 0.0;
    int theta_order = 0;
    int phi_order = 0;
    std::vector<AngularNode> nodes;

    static AngularQuadrature cap(double theta_max, int theta_order, int phi_order);
    double total_weight() const;
    double solid_angle() const;
};

struct SimpsonResult {
    double value = 0.0;
    double richardson_error = -1.0;  // < 0 when the grid cannot support the estimate
    bool trapezoid_tail = false;     // even point count; last interval by trapezoid
};

/// Composite Simpson on a uniformly spaced grid (spacing checked to 1e-9
/// relative). Grids with an even point count get a trapezoid tail. The error
/// estimate compares against the stride-2 subgrid when (n-1) % 4 == 0.
SimpsonResult simpson_integrate(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace spdcq
