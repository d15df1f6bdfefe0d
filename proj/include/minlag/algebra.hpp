#pragma once

#include <array>
#include <vector>

#include "minlag/mat3.hpp"

namespace minlag {
namespace algebra {

/// epsilon = exp(i pi / 3), the primitive 6th root of unity of the grading.
inline cplx epsilon() {
    static const cplx e = std::exp(cplx(0.0, kPi / 3.0));
    return e;
}

/// epsilon^k computed by repeated multiplication (no branch-cut drift).
inline cplx epsilon_pow(int k) {
    static const std::array<cplx, 6> table = [] {
        std::array<cplx, 6> t;
        t[0] = 1.0;
        for (int j = 1; j < 6; ++j) t[j] = t[j - 1] * epsilon();
        return t;
    }();
    return table[((k % 6) + 6) % 6];
}

inline const Mat3& P() {
    static const Mat3 p = [] {
        Mat3 m = Mat3::Zero();
        m(0, 1) = epsilon_pow(2);
        m(1, 0) = epsilon_pow(4);
        m(2, 2) = 1.0;
        return m;
    }();
    return p;
}

inline const Mat3& P2() {  // = P P^T
    static const Mat3 p = [] {
        Mat3 m = Mat3::Zero();
        m(0, 0) = epsilon_pow(4);
        m(1, 1) = epsilon_pow(2);
        m(2, 2) = 1.0;
        return m;
    }();
    return p;
}

inline const Mat3& P3() {  // = P P^T P
    static const Mat3 p = [] {
        Mat3 m = Mat3::Zero();
        m(0, 1) = 1.0;
        m(1, 0) = 1.0;
        m(2, 2) = 1.0;
        return m;
    }();
    return p;
}

/// Conjugator carrying the embedded so(3) onto the standard one.
inline const Mat3& Hconj() {
    static const Mat3 h = [] {
        Mat3 m;
        m << cplx(0.5, -0.5), cplx(0.5, 0.5), 0.0,
             cplx(0.5, 0.5), cplx(0.5, -0.5), 0.0,
             0.0, 0.0, 1.0;
        return m;
    }();
    return h;
}

enum class Level { algebra, group };

/// One application of the order-6 automorphism:
/// sigma(X) = -P X^T P on sl(3,C), sigma(g) = P (g^T)^{-1} P on SL(3,C).
inline Mat3 sigma_once(const Mat3& x, Level level) {
    if (level == Level::algebra) return -P() * x.transpose() * P();
    Eigen::FullPivLU<Mat3> lu(x.transpose());
    if (!lu.isInvertible()) throw Error("sigma_apply: singular group element");
    return P() * lu.inverse() * P();
}

inline Mat3 sigma_apply(const Mat3& x, int power, Level level) {
    require_finite(x, "sigma_apply");
    Mat3 r = x;
    int p = ((power % 6) + 6) % 6;
    for (int k = 0; k < p; ++k) r = sigma_once(r, level);
    return r;
}

/// Anti-linear real-form involution: tau(X) = -conj(X)^T on the algebra,
/// tau(g) = (conj(g)^T)^{-1} on the group; Fix(tau) = su(3) resp. SU(3).
inline Mat3 tau_apply(const Mat3& x, Level level) {
    require_finite(x, "tau_apply");
    if (level == Level::algebra) return -x.adjoint().eval();
    Eigen::FullPivLU<Mat3> lu(x.adjoint());
    if (!lu.isInvertible()) throw Error("tau_apply: singular group element");
    return lu.inverse();
}

/// Component of a trace-free X in the eigenspace g_k of sigma
/// (eigenvalue epsilon^k), by averaging over the cyclic group:
/// (1/6) sum_j epsilon^{-kj} sigma^j(X).
inline Mat3 eigenspace_project(const Mat3& x, int k, double tol = default_tol().algebra) {
    require_finite(x, "eigenspace_project");
    require_traceless(x, tol * 10, "eigenspace_project");
    Mat3 acc = Mat3::Zero();
    Mat3 cur = x;
    for (int j = 0; j < 6; ++j) {
        acc += epsilon_pow(-k * j) * cur;
        cur = sigma_once(cur, Level::algebra);
    }
    return acc / 6.0;
}

/// The explicit eigenspace bases; dimensions (1,2,1,1,1,2) for k = 0..5.
inline std::vector<Mat3> eigenspace_basis(int k) {
    k = ((k % 6) + 6) % 6;
    std::vector<Mat3> b;
    switch (k) {
        case 0: {
            Mat3 m = Mat3::Zero();
            m(0, 0) = 1.0;
            m(1, 1) = -1.0;
            b.push_back(m);
            break;
        }
        case 1:
            b.push_back(Eij(1, 2));             // b-slot
            b.push_back(Eij(2, 3) + Eij(3, 1)); // a-slot
            break;
        case 2:
            b.push_back(Eij(1, 3) - Eij(3, 2));
            break;
        case 3: {
            Mat3 m = Mat3::Zero();
            m(0, 0) = 1.0;
            m(1, 1) = 1.0;
            m(2, 2) = -2.0;
            b.push_back(m);
            break;
        }
        case 4:
            b.push_back(Eij(2, 3) - Eij(3, 1));
            break;
        case 5:
            b.push_back(Eij(1, 3) + Eij(3, 2)); // a-slot
            b.push_back(Eij(2, 1));             // b-slot
            break;
    }
    return b;
}

inline int eigenspace_dim(int k) {
    static const std::array<int, 6> dims = {1, 2, 1, 1, 1, 2};
    return dims[((k % 6) + 6) % 6];
}

inline Mat3 commutator(const Mat3& a, const Mat3& b) { return a * b - b * a; }

/// Norm of the component of x outside the listed eigenspaces.
inline double off_eigenspace_mass(const Mat3& x, std::initializer_list<int> allowed,
                                  double tol = default_tol().algebra) {
    Mat3 rest = traceless_part(x);
    for (int k : allowed) rest -= eigenspace_project(traceless_part(x), k, tol);
    return frob(rest);
}

}  // namespace algebra
}  // namespace minlag
