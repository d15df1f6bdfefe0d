#pragma once

#include <Eigen/Dense>
#include <random>

#include "minlag/common.hpp"

namespace minlag {

using Mat3 = Eigen::Matrix3cd;
using Vec3 = Eigen::Vector3cd;

inline Vec3 basis_e(int k) {
    Vec3 v = Vec3::Zero();
    v(k) = 1.0;
    return v;
}

/// Elementary matrix E_{ij} (1-based indices, matching the usual notation).
inline Mat3 Eij(int i, int j) {
    Mat3 m = Mat3::Zero();
    m(i - 1, j - 1) = 1.0;
    return m;
}

inline double frob(const Mat3& m) { return m.norm(); }

inline bool is_finite(const Mat3& m) {
    return m.allFinite();
}

/// C-bilinear dot product u . v = sum_k u_k v_k (no conjugation).
inline cplx bdot(const Vec3& u, const Vec3& v) {
    return u(0) * v(0) + u(1) * v(1) + u(2) * v(2);
}

/// Hermitian product <u, v> = u . conj(v).
inline cplx hdot(const Vec3& u, const Vec3& v) {
    return bdot(u, v.conjugate());
}

inline double unitary_defect(const Mat3& g) {
    return (g.adjoint() * g - Mat3::Identity()).norm();
}

inline void require_finite(const Mat3& m, const char* what) {
    if (!is_finite(m)) throw Error(std::string(what) + ": non-finite entries");
}

inline void require_traceless(const Mat3& m, double tol, const char* what) {
    double scale = std::max(1.0, frob(m));
    if (std::abs(m.trace()) > tol * scale)
        throw Error(std::string(what) + ": trace " + fmt17(std::abs(m.trace())) +
                    " exceeds tolerance");
}

inline void require_unitary(const Mat3& g, double tol, const char* what) {
    if (unitary_defect(g) > tol)
        throw NotUnitary(std::string(what) + ": defect " + fmt17(unitary_defect(g)));
}

inline Mat3 traceless_part(const Mat3& m) {
    return m - (m.trace() / 3.0) * Mat3::Identity();
}

// ---------------------------------------------------------------------------
// Seeded random matrices for property tests and equivariance checks.
// ---------------------------------------------------------------------------

inline Mat3 random_ginibre(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = cplx(n(rng), n(rng));
    return m;
}

/// Trace-free random element of sl(3,C).
inline Mat3 random_sl3(std::mt19937_64& rng) {
    return traceless_part(random_ginibre(rng));
}

/// Haar-ish random SU(3): QR of a Ginibre matrix, phases fixed so R has a
/// positive diagonal, then the determinant is normalized by a cube root.
inline Mat3 random_su3(std::mt19937_64& rng) {
    Eigen::HouseholderQR<Mat3> qr(random_ginibre(rng));
    Mat3 q = qr.householderQ();
    Mat3 r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < 3; ++k) {
        cplx d = r(k, k);
        q.col(k) *= (d == cplx(0) ? 1.0 : d / std::abs(d));
    }
    cplx det = q.determinant();
    q /= std::pow(det, 1.0 / 3.0);
    return q;
}

/// Random element of su(3) (skew-Hermitian, trace-free).
inline Mat3 random_su3_algebra(std::mt19937_64& rng) {
    Mat3 x = random_sl3(rng);
    return 0.5 * (x - x.adjoint().eval());
}

}  // namespace minlag
