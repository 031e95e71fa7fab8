#pragma once

// Reference implementations that share no code with the library: a cyclic
// Jacobi eigensolver on the dense charge-basis matrix, closed forms for the
// circuit relations, and the analytic two-level anticrossing.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

inline constexpr double e = 1.602176634e-19;
inline constexpr double h = 6.62607015e-34;
inline constexpr double eps0 = 8.8541878128e-12;
inline constexpr double kB = 1.380649e-23;

// Dense symmetric eigenvalues by cyclic Jacobi rotations, ascending.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

// H = 4 E_C (n - n_g)^2 - (E_J / 2)(|n><n+1| + h.c.), n in [-N, N].
inline std::vector<double> transmon_levels(double ej, double ec, double ng, int n_half) {
    const std::size_t dim = 2 * static_cast<std::size_t>(n_half) + 1;
    std::vector<std::vector<double>> m(dim, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < dim; ++i) {
        const double n = static_cast<double>(i) - n_half;
        m[i][i] = 4.0 * ec * (n - ng) * (n - ng);
        if (i + 1 < dim) m[i][i + 1] = m[i + 1][i] = -0.5 * ej;
    }
    return jacobi_eigenvalues(std::move(m));
}

struct Transitions {
    double f01, alpha;
};

inline Transitions transitions(double ej, double ec, double ng = 0.0, int n_half = 40) {
    const auto ev = transmon_levels(ej, ec, ng, n_half);
    const double f01 = ev[1] - ev[0];
    return {f01, (ev[2] - ev[1]) - f01};
}

// Parallel-plate capacitance in fF.
inline double plate_ff(double area_um2, double d_nm, double eps_r) {
    return eps0 * eps_r * area_um2 * 1e-12 / (d_nm * 1e-9) * 1e15;
}

// E_C / h in GHz for capacitance in fF.
inline double ec_ghz(double c_ff) { return e * e / (2.0 * c_ff * 1e-15) / h * 1e-9; }

// E_J / h in GHz for critical current in nA: (Phi0 / 2 pi) I_c / h.
inline double ej_ghz(double ic_na) {
    const double phi0 = h / (2.0 * e);
    return phi0 / (2.0 * std::numbers::pi) * ic_na * 1e-9 / h * 1e-9;
}

// Equal-gap SIS quasiparticle current at T = 0, gamma = 0, as I R_n in uV
// for bias u = eV in ueV: u E(k) - (2 Delta)^2 K(k) / (2u), k^2 = 1 - (2 Delta / u)^2.
inline double sis_current_t0(double u_uev, double gap_uev) {
    if (u_uev <= 2.0 * gap_uev) return 0.0;
    const double k = std::sqrt(1.0 - std::pow(2.0 * gap_uev / u_uev, 2));
    return u_uev * std::comp_ellint_2(k) - std::pow(2.0 * gap_uev, 2) / (2.0 * u_uev) * std::comp_ellint_1(k);
}

// Qubit coupled to one two-level defect: minimum splitting of the
// symmetric 2x2 block is 2g.
inline double anticrossing_gap(double detuning, double g) { return std::sqrt(detuning * detuning + 4.0 * g * g); }

}  // namespace oracle
