#pragma once

#include "minlag/frames.hpp"

namespace minlag {

// ---------------------------------------------------------------------------
// Flag-space values. All three 6-symmetric targets are SU(3)/U1 with
// U1 = {diag(a, 1/a, 1)}; the base points are
//   FL1: (e3, span_R{e1~, e2~, e3}) with the real structure v -> P3 conj(v),
//   FL2: (e3, C e3 c C e3 + C e1 c C^3),
//   FL3: P itself, the orbit being U -> U P U^T.
// ---------------------------------------------------------------------------

/// Point of FL1: unit vector v inside an oriented special Lagrangian
/// subspace, stored as a Hermitian-orthonormal real frame together with the
/// real-structure matrix S = F P3 F^T that represents the subspace itself.
struct FL1Point {
    Vec3 v;
    Mat3 real_frame;  // columns (F e1~, F e2~, f) spanning the subspace over R
    Mat3 S;           // symmetric unitary, S conj(.) is the reflection in the subspace
};

/// Point of FL2: unit vector w and the special complex flag
/// C w c C w + C xi~ c C^3, stored via orthonormal spans and the two
/// orthogonal projectors used for comparisons.
struct FL2Point {
    Vec3 w;
    Vec3 q2;    // second flag direction (xi~)
    Mat3 proj1; // projector onto C w
    Mat3 proj2; // projector onto C w + C q2
};

/// Point of FL3: the symmetric-space representative F P F^T.
struct FL3Point {
    Mat3 S;
};

struct GaussMaps {
    Field<FL1Point> g1;
    Field<FL2Point> g2;
    Field<FL3Point> g3;
};

enum class ProjectionKind { H1, H2, H31, H32 };

/// Projected targets: H1 and H31 land in the (5-dimensional) Lagrangian
/// Grassmannians, H2 and H32 in the (6-dimensional) flag spaces.
struct ProjectedPoint {
    ProjectionKind kind;
    Mat3 value;   // H1/H31: symmetric unitary; H32: unitary with spectrum
                  // {eps^4, eps^2, 1}; H2: proj1 + 2*proj2 packed below
    Mat3 value2;  // H2 only: second projector
};

namespace detail {

inline const Vec3& e1_tilde() {
    static const Vec3 v = [] {
        Vec3 t;
        t << cplx(0.5, 0.5), cplx(0.5, -0.5), 0.0;
        return t;
    }();
    return v;
}
inline const Vec3& e2_tilde() {
    static const Vec3 v = [] {
        Vec3 t;
        t << cplx(0.5, -0.5), cplx(0.5, 0.5), 0.0;
        return t;
    }();
    return v;
}

inline void require_special(const FrameField& fr) {
    if (!fr.has_frames) throw GaugeError("gauss_map: frame field carries no frames");
    double dd = frame_det_defect(fr);
    if (dd > std::max(1e-6, sq(fr.grid.h())))
        throw GaugeError("gauss_map: det F defect " + fmt17(dd));
}

}  // namespace detail

inline FL1Point gauss1_point(const Mat3& F) {
    FL1Point p;
    p.v = F.col(2);
    p.real_frame.col(0) = F * detail::e1_tilde();
    p.real_frame.col(1) = F * detail::e2_tilde();
    p.real_frame.col(2) = F.col(2);
    p.S = F * algebra::P3() * F.transpose();
    return p;
}

inline FL2Point gauss2_point(const Mat3& F) {
    FL2Point p;
    p.w = F.col(2);
    p.q2 = F.col(0);  // xi~ column
    p.proj1 = p.w * p.w.adjoint();
    p.proj2 = p.proj1 + p.q2 * p.q2.adjoint();
    return p;
}

inline FL3Point gauss3_point(const Mat3& F) {
    return FL3Point{F * algebra::P() * F.transpose()};
}

inline GaussMaps gauss_map(const FrameField& fr) {
    detail::require_special(fr);
    GaussMaps g;
    g.g1 = Field<FL1Point>(fr.grid);
    g.g2 = Field<FL2Point>(fr.grid);
    g.g3 = Field<FL3Point>(fr.grid);
    for (int i = 0; i < fr.grid.size(); ++i) {
        g.g1[i] = gauss1_point(fr.F[i]);
        g.g2[i] = gauss2_point(fr.F[i]);
        g.g3[i] = gauss3_point(fr.F[i]);
    }
    return g;
}

inline ProjectedPoint project_point(const FL1Point& p) {
    return {ProjectionKind::H1, p.S, Mat3::Zero()};
}
inline ProjectedPoint project_point(const FL2Point& p) {
    return {ProjectionKind::H2, p.proj1, p.proj2};
}

/// Both FL3 projections are functions of the flag value itself:
/// for S = U P U^T one has S conj(S) = U (P P^T) U^{-1} and
/// S conj(S) S = U (P P^T P) U^T.
inline ProjectedPoint project_point(const FL3Point& p, ProjectionKind which) {
    Mat3 h32 = p.S * p.S.conjugate();
    if (which == ProjectionKind::H32)
        return {ProjectionKind::H32, h32, Mat3::Zero()};
    if (which == ProjectionKind::H31)
        return {ProjectionKind::H31, (h32 * p.S).eval(), Mat3::Zero()};
    throw VariantMismatch("FL3 values project to H31 or H32");
}

/// Same projections computed from a frame representative.
inline ProjectedPoint project_fl3(ProjectionKind which, const Mat3& F) {
    if (which == ProjectionKind::H31)
        return {ProjectionKind::H31, F * algebra::P3() * F.transpose(), Mat3::Zero()};
    return {ProjectionKind::H32, F * algebra::P2() * F.inverse(), Mat3::Zero()};
}

inline Field<ProjectedPoint> project_gauss(const Field<FL1Point>& g, ProjectionKind which) {
    if (which != ProjectionKind::H1)
        throw VariantMismatch("FL1 values project to H1 only");
    Field<ProjectedPoint> out(g.grid);
    for (int i = 0; i < g.size(); ++i) out[i] = project_point(g[i]);
    return out;
}
inline Field<ProjectedPoint> project_gauss(const Field<FL2Point>& g, ProjectionKind which) {
    if (which != ProjectionKind::H2)
        throw VariantMismatch("FL2 values project to H2 only");
    Field<ProjectedPoint> out(g.grid);
    for (int i = 0; i < g.size(); ++i) out[i] = project_point(g[i]);
    return out;
}
inline Field<ProjectedPoint> project_gauss(const Field<FL3Point>& g, ProjectionKind which) {
    Field<ProjectedPoint> out(g.grid);
    for (int i = 0; i < g.size(); ++i) out[i] = project_point(g[i], which);
    return out;
}

/// Membership defect of an FL3 value: unitary, det = det P = -1, and
/// S conj(S) carries the fixed spectrum.
inline double fl3_defect(const Mat3& s) {
    double d = unitary_defect(s);
    d = std::max(d, std::abs(s.determinant() - algebra::P().determinant()));
    Mat3 h32 = s * s.conjugate();
    Eigen::ComplexEigenSolver<Mat3> es(h32);
    std::vector<double> args;
    for (int k = 0; k < 3; ++k) args.push_back(std::arg(es.eigenvalues()(k)));
    std::sort(args.begin(), args.end());
    d = std::max(d, std::abs(args[0] - std::arg(algebra::epsilon_pow(4))));
    d = std::max(d, std::abs(args[1]));
    d = std::max(d, std::abs(args[2] - std::arg(algebra::epsilon_pow(2))));
    return d;
}

/// Project a whole Gauss-map field: H1 drops v, H2 drops w,
/// H31 = F (P P^T P) F^T, H32 = F (P P^T) F^{-1}.
inline Field<ProjectedPoint> project_gauss(const FrameField& fr, ProjectionKind which) {
    detail::require_special(fr);
    Field<ProjectedPoint> out(fr.grid);
    for (int i = 0; i < fr.grid.size(); ++i) {
        const Mat3& F = fr.F[i];
        switch (which) {
            case ProjectionKind::H1: out[i] = project_point(gauss1_point(F)); break;
            case ProjectionKind::H2: out[i] = project_point(gauss2_point(F)); break;
            default: out[i] = project_fl3(which, F); break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stabilizer membership
// ---------------------------------------------------------------------------

enum class Stabilizer { U1, D3, SO3 };

inline bool stabilizer_membership(const Mat3& g, Stabilizer which,
                                  double tol = 1e-10) {
    require_unitary(g, 1e-8, "stabilizer_membership");
    if (std::abs(g.determinant() - cplx(1, 0)) > 1e-8)
        throw NotUnitary("stabilizer_membership: det != 1");
    auto offdiag = [&] {
        double s = 0;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                if (r != c) s += std::abs(g(r, c));
        return s;
    };
    switch (which) {
        case Stabilizer::D3:
            return offdiag() < tol;
        case Stabilizer::U1:
            return offdiag() < tol && std::abs(g(2, 2) - cplx(1, 0)) < tol &&
                   std::abs(g(0, 0) * g(1, 1) - cplx(1, 0)) < tol;
        case Stabilizer::SO3: {
            Mat3 m = algebra::Hconj() * g * algebra::Hconj().inverse();
            double imag_mass = 0;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) imag_mass += std::abs(std::imag(m(r, c)));
            return imag_mass < tol && (m * m.transpose() - Mat3::Identity()).norm() < tol &&
                   std::abs(m.determinant() - cplx(1, 0)) < tol;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Equivariance
// ---------------------------------------------------------------------------

struct EquivarianceReport {
    double dev_g1 = 0, dev_g2 = 0, dev_g3 = 0;
    double dev_h1 = 0, dev_h2 = 0, dev_h31 = 0, dev_h32 = 0;
    double max_deviation() const {
        return std::max({dev_g1, dev_g2, dev_g3, dev_h1, dev_h2, dev_h31, dev_h32});
    }
};

/// Verify that the Gauss maps of T f are the T-translates of the Gauss maps
/// of f: G3 -> T G3 T^T, H32 -> T H32 T^{-1}, H31/H1 -> T . T^T, flag data
/// rotated by T. The lift must already be special; T f is then special too.
inline EquivarianceReport equivariance_check(const LiftField& lift, const Mat3& T) {
    require_unitary(T, 1e-10, "equivariance_check");
    if (std::abs(T.determinant() - cplx(1, 0)) > 1e-10)
        throw NotUnitary("equivariance_check: det T != 1");

    InvariantField inv0 = derive_invariants(lift);
    FrameField fr0 = build_frame(lift, inv0);

    LiftField moved(lift.grid);
    for (int i = 0; i < lift.size(); ++i) moved[i] = T * lift[i];
    InvariantField inv1 = derive_invariants(moved);
    FrameField fr1 = build_frame(moved, inv1);

    EquivarianceReport r;
    for (int i = 0; i < lift.size(); ++i) {
        const Mat3 &F0 = fr0.F[i], &F1 = fr1.F[i];
        FL1Point a1 = gauss1_point(F0), b1 = gauss1_point(F1);
        r.dev_g1 = std::max(r.dev_g1,
                            std::max((T * a1.S * T.transpose() - b1.S).norm(),
                                     (T * a1.v - b1.v).norm()));
        FL2Point a2 = gauss2_point(F0), b2 = gauss2_point(F1);
        r.dev_g2 = std::max(r.dev_g2,
                            std::max((T * a2.proj1 * T.adjoint() - b2.proj1).norm(),
                                     (T * a2.proj2 * T.adjoint() - b2.proj2).norm()));
        FL3Point a3 = gauss3_point(F0), b3 = gauss3_point(F1);
        r.dev_g3 = std::max(r.dev_g3, (T * a3.S * T.transpose() - b3.S).norm());

        r.dev_h1 = std::max(r.dev_h1, (T * a1.S * T.transpose() - b1.S).norm());
        r.dev_h2 = r.dev_g2;
        r.dev_h31 = std::max(
            r.dev_h31,
            (T * (F0 * algebra::P3() * F0.transpose()) * T.transpose() -
             F1 * algebra::P3() * F1.transpose()).norm());
        r.dev_h32 = std::max(
            r.dev_h32, (T * (F0 * algebra::P2() * F0.inverse()) * T.inverse() -
                        F1 * algebra::P2() * F1.inverse()).norm());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Ruh-Vilms report
// ---------------------------------------------------------------------------

/// The surface-class side of the equivalences, decided directly on the
/// invariant fields (phi, a - b, rho, constancy) rather than through the
/// eigenspace decomposition; the two routes must agree.
struct SurfaceConditions {
    double max_phi = 0, max_ab = 0, max_rho = 0;
    double dev_w = 0, dev_phi = 0, dev_psi = 0;
    cplx psi_mean = 0;
    bool minimal_lagrangian = false;
    bool minimal = false;
    bool flat_homogeneous = false;
};

inline SurfaceConditions surface_conditions(const InvariantField& inv, double tol_c) {
    const GridDomain& g = inv.grid;
    SurfaceConditions sc;
    cplx psi_mean = 0, phi_mean = 0;
    double w_mean = 0;
    int n = 0;
    const int ring = 2;
    for (int iy = ring; iy < g.ny - ring; ++iy)
        for (int ix = ring; ix < g.nx - ring; ++ix) {
            int i = g.idx(ix, iy);
            psi_mean += inv.psi[i];
            phi_mean += inv.phi[i];
            w_mean += inv.w[i];
            ++n;
        }
    psi_mean /= double(n);
    phi_mean /= double(n);
    w_mean /= n;
    for (int iy = ring; iy < g.ny - ring; ++iy)
        for (int ix = ring; ix < g.nx - ring; ++ix) {
            int i = g.idx(ix, iy);
            sc.max_phi = std::max(sc.max_phi, std::abs(inv.phi[i]));
            sc.max_ab = std::max(sc.max_ab, std::abs(inv.a[i] - inv.b[i]));
            sc.max_rho = std::max(sc.max_rho, std::abs(inv.rho[i]));
            sc.dev_w = std::max(sc.dev_w, std::abs(inv.w[i] - w_mean));
            sc.dev_phi = std::max(sc.dev_phi, std::abs(inv.phi[i] - phi_mean));
            sc.dev_psi = std::max(sc.dev_psi, std::abs(inv.psi[i] - psi_mean));
        }
    sc.psi_mean = psi_mean;
    double const_tol = std::max(tol_c, 10.0 * sq(g.h()));
    sc.minimal = sc.max_phi < tol_c;
    sc.minimal_lagrangian = sc.minimal && sc.max_ab < tol_c && sc.max_rho < tol_c;
    sc.flat_homogeneous = sc.max_ab < const_tol && sc.dev_w < const_tol &&
                          sc.dev_phi < const_tol && sc.dev_psi < const_tol &&
                          std::abs(psi_mean) > 1e-6;
    return sc;
}

struct RuhVilmsReport {
    PrimitivityReport prim;       // eigenspace route on the shared frame
    SurfaceConditions conditions; // invariant-field route (empty for MC-only data)
    bool has_conditions = false;
    // Gauss-map primitivity, decided at the frame level: each Gauss map is
    // primitive exactly when the shared frame is primitive for the relevant
    // power of sigma.
    bool g1_g2_g3_primitive = false;   // sigma
    bool h2_h32_primitive = false;     // sigma^2
    bool h1_h31_primitive = false;     // sigma^3
    bool equivalence_sigma = false;    // sigma-flag == minimal Lagrangian
    bool equivalence_sigma2 = false;   // sigma^2-flag == minimal
    bool equivalence_sigma3 = false;   // sigma^3-flag == (ML or flat homog.)
    bool all_equivalences_hold = false;
};

inline RuhVilmsReport ruh_vilms_report_from_frame(const FrameField& fr,
                                                  const InvariantField* inv,
                                                  double tol_c) {
    RuhVilmsReport rep;
    rep.prim = classify_primitivity(fr, tol_c);
    rep.g1_g2_g3_primitive = rep.prim.sigma;
    rep.h2_h32_primitive = rep.prim.sigma2;
    rep.h1_h31_primitive = rep.prim.sigma3;
    if (inv) {
        rep.has_conditions = true;
        rep.conditions = surface_conditions(*inv, tol_c);
        rep.equivalence_sigma = (rep.prim.sigma == rep.conditions.minimal_lagrangian);
        rep.equivalence_sigma2 = (rep.prim.sigma2 == rep.conditions.minimal);
        rep.equivalence_sigma3 =
            (rep.prim.sigma3 ==
             (rep.conditions.minimal_lagrangian || rep.conditions.flat_homogeneous));
        rep.all_equivalences_hold =
            rep.equivalence_sigma && rep.equivalence_sigma2 && rep.equivalence_sigma3;
    }
    return rep;
}

/// Full pipeline from a lift: special lift, frame, both classification
/// routes, and the induced Gauss-map primitivity flags.
inline RuhVilmsReport ruh_vilms_report(const LiftField& lift,
                                       const Tolerances& tol = default_tol()) {
    SpecialFrame sf = make_special_frame(lift);
    double tol_c = std::max(tol.classifier, tol.classifier_fd_factor * sq(lift.grid.h()));
    return ruh_vilms_report_from_frame(sf.frame, &sf.inv, tol_c);
}

}  // namespace minlag
