#pragma once

// Independent reference implementations used only by the tests: rotation
// matrices (Rodrigues) and spin-1/2 propagators as complex 2x2 matrices.
// Nothing here touches the library's quaternion code.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using Mat3 = std::array<std::array<double, 3>, 3>;
using V3 = std::array<double, 3>;

inline Mat3 rodrigues(V3 n, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double t = 1.0 - c;
    const auto [x, y, z] = n;
    return {{{t * x * x + c, t * x * y - s * z, t * x * z + s * y},
             {t * x * y + s * z, t * y * y + c, t * y * z - s * x},
             {t * x * z - s * y, t * y * z + s * x, t * z * z + c}}};
}

inline Mat3 matmul(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                r[i][j] += a[i][k] * b[k][j];
    return r;
}

inline V3 apply(const Mat3& m, V3 v) {
    V3 r{};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            r[i] += m[i][k] * v[k];
    return r;
}

using C = std::complex<double>;
using SU2 = std::array<std::array<C, 2>, 2>;

// exp(-i angle/2 n.sigma): rotates Bloch vectors right-handedly about n.
inline SU2 spinor(V3 n, double angle) {
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    const C i{0.0, 1.0};
    return {{{c - i * s * n[2], -i * s * (n[0] - i * n[1])},
             {-i * s * (n[0] + i * n[1]), c + i * s * n[2]}}};
}

inline SU2 mul(const SU2& a, const SU2& b) {
    SU2 r{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                r[i][j] += a[i][k] * b[k][j];
    return r;
}

// Quaternion-like components (w, v): U = w I - i v.sigma.
struct Components {
    double w;
    V3 v;
};

inline Components components(const SU2& u) {
    const C i{0.0, 1.0};
    const double w = 0.5 * (u[0][0] + u[1][1]).real();
    // tr(U sigma_k) = -2i v_k
    const C tx = u[0][1] + u[1][0];
    const C ty = i * u[0][1] - i * u[1][0];
    const C tz = u[0][0] - u[1][1];
    return {w, {(0.5 * i * tx).real(), (0.5 * i * ty).real(), (0.5 * i * tz).real()}};
}

// Symmetric single-pulse cycle at static offset w0 (rad/s): free te-tp over 2,
// pulse of length tp at amplitude w1 and phase phi, free again.
inline SU2 cycle(double te, double tp, double w1, double phi, double w0) {
    const double free = 0.5 * (te - tp);
    const SU2 f = spinor({0, 0, 1}, w0 * free);
    const double om = std::hypot(w1, w0);
    const SU2 p = spinor({w1 * std::cos(phi) / om, w1 * std::sin(phi) / om, w0 / om}, om * tp);
    return mul(f, mul(p, f));
}

} // namespace oracle
