#pragma once

namespace spdcq::constants {

// CODATA 2018 exact / defined values.
inline constexpr double speed_of_light = 299792458.0;        // m/s
inline constexpr double vacuum_permeability = 1.25663706212e-6;  // H/m
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double pi = 3.14159265358979323846;

// Canonical wavelength <-> angular frequency conversions (vacuum).
inline constexpr double omega_from_wavelength(double lambda_m) {
    return 2.0 * pi * speed_of_light / lambda_m;
}
inline constexpr double wavelength_from_omega(double omega_rad_s) {
    return 2.0 * pi * speed_of_light / omega_rad_s;
}

}  // namespace spdcq::constants
