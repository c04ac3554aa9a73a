#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spdcq {

using complexd = std::complex<double>;

/// Raised when a dataset or configuration violates its contract.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an iterative numerical procedure fails to converge.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// QNM eigenvalue, omega_tilde = omega - i*gamma (rad/s). gamma > 0 for any
/// mode that enters a rate computation; validation rejects the rest.
struct ComplexFrequency {
    double omega = 0.0;  // resonance frequency (rad/s)
    double gamma = 0.0;  // radiative leakage rate (rad/s)

    complexd value() const { return {omega, -gamma}; }
};

/// Q = omega / (2*gamma). Throws std::domain_error for gamma <= 0.
double q_factor(const ComplexFrequency& ef);

/// Complex 3-vector field sampled at the cell centers of a regular Cartesian
/// box. `origin` is the lower corner of the integration box; node (i,j,k)
/// sits at origin + (index + 1/2) * spacing. Values are stored row-major with
/// the vector component fastest: ((i*ny + j)*nz + k)*3 + c.
struct NearFieldGrid {
    std::array<double, 3> origin{};   // m
    std::array<double, 3> spacing{};  // m, all > 0
    std::array<std::size_t, 3> shape{};
    std::vector<complexd> values;     // node_count() * 3 entries

    std::size_t node_count() const { return shape[0] * shape[1] * shape[2]; }
    double cell_volume() const { return spacing[0] * spacing[1] * spacing[2]; }

    std::array<double, 3> node_position(std::size_t i, std::size_t j, std::size_t k) const {
        return {origin[0] + (static_cast<double>(i) + 0.5) * spacing[0],
                origin[1] + (static_cast<double>(j) + 0.5) * spacing[1],
                origin[2] + (static_cast<double>(k) + 0.5) * spacing[2]};
    }

    std::size_t value_index(std::size_t i, std::size_t j, std::size_t k, std::size_t comp) const {
        return ((i * shape[1] + j) * shape[2] + k) * 3 + comp;
    }

    // Overlap integrals require exact geometry agreement; fields are never
    // resampled between grids.
    bool same_geometry(const NearFieldGrid& other) const {
        return origin == other.origin && spacing == other.spacing && shape == other.shape;
    }
};

/// One far-field amplitude sample in the (theta_hat, phi_hat) basis.
struct PolarizedAmplitude {
    complexd e_theta;
    complexd e_phi;

    complexd project(const std::array<double, 2>& d) const {
        return e_theta * d[0] + e_phi * d[1];
    }
    double power() const { return std::norm(e_theta) + std::norm(e_phi); }
};

/// Radius-removed angular amplitude F(theta,phi) = lim r*exp(-ikr)*E(r),
/// stored on a rectangular (theta, phi) grid in the (theta_hat, phi_hat)
/// polarization basis. Rates depend only on |F|^2, so no observation radius
/// appears downstream. Datasets exported at a finite radius rho declare it in
/// `reference_radius`; the amplitude used everywhere is reference_radius
/// times the stored value.
struct FarFieldAmplitude {
    std::vector<double> theta_nodes;  // strictly increasing, within [0, pi]
    std::vector<double> phi_nodes;    // strictly increasing, within [0, 2*pi)
    std::vector<complexd> amp_theta;  // n_theta * n_phi, phi fastest
    std::vector<complexd> amp_phi;
    double reference_radius = 1.0;    // m; 1 when amplitudes are already radius-removed

    std::size_t n_theta() const { return theta_nodes.size(); }
    std::size_t n_phi() const { return phi_nodes.size(); }
    std::size_t index(std::size_t it, std::size_t ip) const { return it * n_phi() + ip; }

    /// Bilinear interpolation; periodic in phi, throws std::domain_error for
    /// theta outside the covered range.
    PolarizedAmplitude sample(double theta, double phi) const;
};

struct QnmMode {
    std::string label;
    ComplexFrequency eigenfrequency;
    NearFieldGrid near_field;  // normalized QNM field units
    FarFieldAmplitude far_field;
};

/// chi^(2)_{alpha beta gamma} in m/V, 27 components, indices over (x,y,z).
struct Chi2Tensor {
    std::array<double, 27> c{};

    double& operator()(std::size_t a, std::size_t b, std::size_t g) { return c[(a * 3 + b) * 3 + g]; }
    double operator()(std::size_t a, std::size_t b, std::size_t g) const { return c[(a * 3 + b) * 3 + g]; }

    bool first_two_symmetric(double tol = 0.0) const;
};

/// Spatially resolved chi^(2) on the shared near-field grid. region_mask
/// holds one region index per grid node; 0 means no nonlinearity and the node
/// contributes exactly zero to every overlap integral. Index r >= 1 selects
/// regions[r-1].
struct Chi2Map {
    std::array<std::size_t, 3> shape{};
    std::vector<std::uint32_t> region_mask;  // node_count entries, row-major like the grid
    std::vector<Chi2Tensor> regions;

    std::size_t node_count() const { return shape[0] * shape[1] * shape[2]; }
};

/// Complete description of one pump + resonator configuration.
struct Scenario {
    double pump_omega = 0.0;      // rad/s
    double pump_intensity = 0.0;  // W/m^2, bookkeeping only
    NearFieldGrid pump_field;     // V/m
    std::vector<QnmMode> modes;
    Chi2Map chi2;
    double n_idler = 1.0;
    double n_signal = 1.0;
    double volume = 0.0;          // resonator volume, m^3

    double degenerate_omega() const { return 0.5 * pump_omega; }
    const QnmMode* find_mode(const std::string& label) const;
};

/// Gaussian fiber mode, amplitude profile (1/(sigma*sqrt(pi)))*exp(-|r|^2/sigma^2)
/// evaluated at the mapped fiber-plane coordinate. `offset` displaces the mode
/// center laterally in that plane.
struct FiberMode {
    double sigma = 0.0;                 // m, > 0
    std::array<double, 2> offset{0.0, 0.0};  // m

    double amplitude(const std::array<double, 2>& r) const;
};

/// Opaque edge cutting the mapped collimated plane along the x axis.
/// orientation +1 blocks x > position, orientation -1 blocks x < position.
struct KnifeState {
    double position = 0.0;  // m
    int orientation = +1;

    bool passes(double x) const {
        return orientation > 0 ? x <= position : x >= position;
    }
};

struct SpectralWindow {
    double omega_min = 0.0;  // rad/s
    double omega_max = 0.0;

    bool contains(double omega) const { return omega >= omega_min && omega <= omega_max; }
};

/// Fixed detection polarizations, components along (theta_hat, phi_hat).
struct PolarizationPair {
    std::array<double, 2> d_idler{1.0, 0.0};
    std::array<double, 2> d_signal{1.0, 0.0};
};

inline constexpr std::array<double, 2> kThetaHat{1.0, 0.0};
inline constexpr std::array<double, 2> kPhiHat{0.0, 1.0};

/// Collection and detection model: NA-limited cone, aplanatic lens mapping,
/// optional Gaussian fiber weights, spectral window and knife mask. Absent
/// `polarization` means an incoherent sum over both (theta_hat, phi_hat)
/// components for signal and idler independently.
struct DetectionConfig {
    double na = 0.7;
    double focal_length = 3.1e-3;  // m
    double magnification = 1.0;
    std::optional<FiberMode> fiber;
    std::optional<SpectralWindow> filter;
    std::optional<KnifeState> knife;
    std::optional<PolarizationPair> polarization;

    double theta_max() const;

    /// Both photons traverse the common filter; the window multiplies the
    /// integrand by f(omega_s) * f(omega_p - omega_s).
    bool filter_passes(double omega_p, double omega_s) const {
        if (!filter) return true;
        return filter->contains(omega_s) && filter->contains(omega_p - omega_s);
    }
};

/// Sine-condition (aplanatic) mapping of a far-field direction to the
/// collimated/fiber plane: (f*M*sin(theta)*cos(phi), f*M*sin(theta)*sin(phi)),
/// minus the fiber offset when one is configured. Throws std::domain_error
/// when theta lies outside the NA cone.
std::array<double, 2> direction_to_fiber_plane(double theta, double phi, const DetectionConfig& det);

/// Same mapping without the fiber offset; the knife sits in the collimated
/// plane and does not move with the fiber.
std::array<double, 2> direction_to_collimated_plane(double theta, double phi, const DetectionConfig& det);

void validate_detection(const DetectionConfig& det);  // throws DataError

}  // namespace spdcq
