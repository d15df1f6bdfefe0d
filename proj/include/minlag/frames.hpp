#pragma once

#include <deque>
#include <set>

#include "minlag/grid.hpp"
#include "minlag/loops.hpp"

namespace minlag {

using LiftField = VectorField;  // unit vectors in C^3 (points of S^5)

inline void validate_lift(const LiftField& lift, double tol = default_tol().unit_norm) {
    for (const Vec3& f : lift.v) {
        if (!f.allFinite()) throw Error("LiftField: non-finite entries");
        if (std::abs(f.norm() - 1.0) > tol)
            throw Error("LiftField: node off the unit sphere by " +
                        fmt17(std::abs(f.norm() - 1.0)));
    }
}

/// All pointwise invariants of an immersion without complex points, sampled
/// on the grid. a + b = 2 and theta = 2 arccos sqrt(a/2) hold nodewise.
struct InvariantField {
    GridDomain grid;
    RealField w;      // log conformal factor, g = 2 e^w dz dzbar
    RealField ew;     // e^w
    RealField a, b;   // Kahler-angle functions, a + b = 2
    RealField theta;  // Kahler angle in (0, pi)
    ComplexField phi;   // coefficient of the (1,0)-form Phi
    ComplexField psi;   // coefficient of the cubic differential Psi
    ComplexField rho;   // f_z . conj(f)
    ComplexField conf;  // conformality defect xi . conj(eta) (diagnostic)
    ComplexField mcform;  // i*phi, dz-coefficient of the mean curvature form
    VectorField xi, eta;
};

struct DeriveOptions {
    double complex_point_eps = default_tol().complex_point;
    double nonconformal_tol = default_tol().nonconformal;
    bool check_conformal = true;
};

inline InvariantField derive_invariants(const LiftField& lift,
                                        const DeriveOptions& opt = {}) {
    lift.grid.validate();
    validate_lift(lift);
    const GridDomain& g = lift.grid;

    VectorField fz = d_z(lift), fzb = d_zbar(lift);
    InvariantField inv;
    inv.grid = g;
    inv.w = RealField(g);
    inv.ew = RealField(g);
    inv.a = RealField(g);
    inv.b = RealField(g);
    inv.theta = RealField(g);
    inv.phi = ComplexField(g);
    inv.psi = ComplexField(g);
    inv.rho = ComplexField(g);
    inv.conf = ComplexField(g);
    inv.mcform = ComplexField(g);
    inv.xi = VectorField(g);
    inv.eta = VectorField(g);

    for (int i = 0; i < g.size(); ++i) {
        const Vec3& f = lift[i];
        cplx rho = hdot(fz[i], f);
        cplx rho2 = hdot(fzb[i], f);
        Vec3 xi = fz[i] - rho * f;
        Vec3 eta = fzb[i] - rho2 * f;
        double xx = std::real(hdot(xi, xi));
        double ee = std::real(hdot(eta, eta));
        double ew = 0.5 * (xx + ee);
        if (!(ew > 0)) throw Error("derive_invariants: degenerate metric");
        double a = xx / ew, b = ee / ew;
        if (a < opt.complex_point_eps || b < opt.complex_point_eps)
            throw ComplexPointDetected("min(a,b) = " + fmt17(std::min(a, b)) +
                                       " at node " + std::to_string(i));
        inv.rho[i] = rho;
        inv.xi[i] = xi;
        inv.eta[i] = eta;
        inv.ew[i] = ew;
        inv.w[i] = std::log(ew);
        inv.a[i] = a;
        inv.b[i] = b;
        inv.theta[i] = 2.0 * std::acos(std::sqrt(0.5 * a));
        inv.conf[i] = hdot(xi, eta);
    }

    VectorField xiz = d_z(inv.xi), xizb = d_zbar(inv.xi);
    for (int i = 0; i < g.size(); ++i) {
        inv.psi[i] = hdot(xiz[i], inv.eta[i]);
        inv.phi[i] = hdot(xizb[i], inv.eta[i]) / inv.ew[i];
        inv.mcform[i] = cplx(0, 1) * inv.phi[i];
    }

    if (opt.check_conformal) {
        // one boundary ring uses one-sided stencils; only held to 10x the bound
        double worst_in = 0.0, worst_bd = 0.0;
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix) {
                int i = g.idx(ix, iy);
                double d = std::abs(inv.conf[i]) / inv.ew[i];
                bool interior = ix > 0 && iy > 0 && ix < g.nx - 1 && iy < g.ny - 1;
                (interior ? worst_in : worst_bd) = std::max(interior ? worst_in : worst_bd, d);
            }
        if (worst_in > opt.nonconformal_tol || worst_bd > 10 * opt.nonconformal_tol)
            throw NonConformal("xi . conj(eta) defect " +
                               fmt17(std::max(worst_in, worst_bd)));
    }
    return inv;
}

// ---------------------------------------------------------------------------
// Phase-gauge invariance diagnostic
// ---------------------------------------------------------------------------

struct GaugeCheckReport {
    double dev_a = 0, dev_b = 0, dev_ew = 0, dev_phi = 0, dev_psi = 0;
    double dev_rho_transport = 0;  // | rho' - rho - h^{-1} h_z |
    double max_deviation() const {
        return std::max({dev_a, dev_b, dev_ew, dev_phi, dev_psi});
    }
};

inline GaugeCheckReport phase_gauge_invariance_check(const LiftField& lift,
                                                     const ComplexField& hfield) {
    if (!lift.grid.same_as(hfield.grid))
        throw GridMismatch("phase_gauge_invariance_check");
    for (cplx h : hfield.v)
        if (std::abs(std::abs(h) - 1.0) > 1e-12)
            throw Error("phase_gauge_invariance_check: |h| != 1");

    LiftField moved(lift.grid);
    for (int i = 0; i < lift.size(); ++i) moved[i] = hfield[i] * lift[i];
    InvariantField i0 = derive_invariants(lift);
    InvariantField i1 = derive_invariants(moved);
    ComplexField hz = d_z(hfield);

    GaugeCheckReport r;
    // phi and psi carry one more derivative level; the comparison skips two
    // boundary rings so one-sided closures do not pollute it
    const int ring = 2;
    const GridDomain& g = lift.grid;
    for (int iy = ring; iy < g.ny - ring; ++iy)
        for (int ix = ring; ix < g.nx - ring; ++ix) {
            int i = g.idx(ix, iy);
            r.dev_a = std::max(r.dev_a, std::abs(i1.a[i] - i0.a[i]));
            r.dev_b = std::max(r.dev_b, std::abs(i1.b[i] - i0.b[i]));
            r.dev_ew = std::max(r.dev_ew, std::abs(i1.ew[i] - i0.ew[i]));
            r.dev_phi = std::max(r.dev_phi, std::abs(i1.phi[i] - i0.phi[i]));
            r.dev_psi = std::max(r.dev_psi, std::abs(i1.psi[i] - i0.psi[i]));
            cplx transport = i1.rho[i] - i0.rho[i] - hz[i] / hfield[i];
            r.dev_rho_transport = std::max(r.dev_rho_transport, std::abs(transport));
        }
    return r;
}

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

/// Moving frame F = (xi~, eta~, f) with its Maurer-Cartan coefficients
/// U = F^{-1} F_z (analytic form) and V = -conj(U)^T. For synthetic
/// Maurer-Cartan data `F` may be absent.
struct FrameField {
    GridDomain grid;
    MatrixField F;
    MatrixField U, V;
    MatrixField Unum;  // numeric F^{-1} F_z, kept as a diagnostic
    bool has_frames = false;
    double ortho_adjust = 0.0;   // worst re-orthonormalization correction
    double crosscheck = 0.0;     // max |U - Unum| over the interior
};

namespace detail {

/// Gram-Schmidt against the exact last column f; the raw columns are already
/// orthonormal up to the discretization error of xi, eta.
inline Mat3 orthonormal_frame(const Vec3& xit, const Vec3& etat, const Vec3& f,
                              double* adjust) {
    Vec3 q3 = f / f.norm();
    Vec3 q1 = xit - hdot(xit, q3) * q3;
    q1 /= q1.norm();
    Vec3 q2 = etat - hdot(etat, q3) * q3 - hdot(etat, q1) * q1;
    q2 /= q2.norm();
    Mat3 out;
    out.col(0) = q1;
    out.col(1) = q2;
    out.col(2) = q3;
    if (adjust) {
        Mat3 raw;
        raw.col(0) = xit;
        raw.col(1) = etat;
        raw.col(2) = f;
        *adjust = std::max(*adjust, (out - raw).norm());
    }
    return out;
}

/// Continuous scalar phase of a nonvanishing complex field, assigned by
/// breadth-first propagation from the grid center; value at the base node is
/// the principal argument. Fails if any grid edge jumps by more than
/// `max_jump` (winding inside a cell, i.e. under-resolution).
inline RealField unwrap_phase(const ComplexField& src, double max_jump = 0.5 * kPi) {
    const GridDomain& g = src.grid;
    RealField theta(g, 0.0);
    std::vector<char> seen(g.size(), 0);
    const int bx = g.nx / 2, by = g.ny / 2;
    const int base = g.idx(bx, by);
    theta[base] = std::arg(src[base]);
    seen[base] = 1;
    std::deque<int> queue{base};
    while (!queue.empty()) {
        int cur = queue.front();
        queue.pop_front();
        int cx = cur % g.nx, cy = cur / g.nx;
        const int nb[4][2] = {{cx + 1, cy}, {cx - 1, cy}, {cx, cy + 1}, {cx, cy - 1}};
        for (auto& [nx_, ny_] : nb) {
            if (nx_ < 0 || ny_ < 0 || nx_ >= g.nx || ny_ >= g.ny) continue;
            int nxt = g.idx(nx_, ny_);
            if (seen[nxt]) continue;
            double step = phase_step(src[cur], src[nxt]);
            if (std::abs(step) > max_jump)
                throw PhaseUnwrapFailure("phase jump " + fmt17(step) +
                                         " across one cell");
            theta[nxt] = theta[cur] + step;
            seen[nxt] = 1;
            queue.push_back(nxt);
        }
    }
    // Cycle consistency: every edge, including the ones not in the BFS tree,
    // must agree with the assigned values (detects winding around a cell).
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            int i = g.idx(ix, iy);
            if (ix + 1 < g.nx) {
                int jx = g.idx(ix + 1, iy);
                if (std::abs(theta[jx] - theta[i] - phase_step(src[i], src[jx])) > 1e-6)
                    throw PhaseUnwrapFailure("winding detected on a grid edge");
            }
            if (iy + 1 < g.ny) {
                int jy = g.idx(ix, iy + 1);
                if (std::abs(theta[jy] - theta[i] - phase_step(src[i], src[jy])) > 1e-6)
                    throw PhaseUnwrapFailure("winding detected on a grid edge");
            }
        }
    return theta;
}

inline Mat3 analytic_U(double a, double b, double ew, cplx az, cplx bz, cplx wz,
                       cplx rho, cplx phi, cplx psi) {
    const double sab = std::sqrt(a * b);
    const double ew2 = std::sqrt(ew);
    Mat3 u = Mat3::Zero();
    u(0, 0) = 0.5 * az / a + 0.5 * wz + rho + phi / a;
    u(0, 1) = -std::conj(phi) / sab;
    u(0, 2) = cplx(0, 1) * std::sqrt(a) * ew2;
    u(1, 0) = psi / (sab * ew);
    u(1, 1) = -0.5 * bz / b - 0.5 * wz + rho + phi / b;
    u(2, 1) = cplx(0, 1) * std::sqrt(b) * ew2;
    u(2, 2) = rho;
    return u;
}

}  // namespace detail

struct BuildFrameOptions {
    bool crosscheck = true;
    double crosscheck_factor = default_tol().crosscheck_factor;
};

/// Assemble the unitary frame and both routes to its Maurer-Cartan form.
/// The analytic route substitutes the invariant fields; the numeric route is
/// F^{-1} F_z. They must agree to O(h^2).
inline FrameField build_frame(const LiftField& lift, const InvariantField& inv,
                              const BuildFrameOptions& opt = {}) {
    if (!lift.grid.same_as(inv.grid)) throw GridMismatch("build_frame");
    const GridDomain& g = lift.grid;
    FrameField fr;
    fr.grid = g;
    fr.F = MatrixField(g);
    fr.U = MatrixField(g);
    fr.V = MatrixField(g);
    fr.Unum = MatrixField(g);
    fr.has_frames = true;

    for (int i = 0; i < g.size(); ++i) {
        double sa = std::sqrt(inv.ew[i] * inv.a[i]);
        double sb = std::sqrt(inv.ew[i] * inv.b[i]);
        Vec3 xit = cplx(0, -1) / sa * inv.xi[i];
        Vec3 etat = cplx(0, -1) / sb * inv.eta[i];
        fr.F[i] = detail::orthonormal_frame(xit, etat, lift[i], &fr.ortho_adjust);
    }

    ComplexField af(g), bf(g), wf(g);
    for (int i = 0; i < g.size(); ++i) {
        af[i] = inv.a[i];
        bf[i] = inv.b[i];
        wf[i] = inv.w[i];
    }
    ComplexField az = d_z(af), bz = d_z(bf), wz = d_z(wf);
    for (int i = 0; i < g.size(); ++i) {
        fr.U[i] = detail::analytic_U(inv.a[i], inv.b[i], inv.ew[i], az[i], bz[i],
                                     wz[i], inv.rho[i], inv.phi[i], inv.psi[i]);
        fr.V[i] = -fr.U[i].conjugate().transpose();
    }

    MatrixField fz = d_z(fr.F);
    for (int i = 0; i < g.size(); ++i)
        fr.Unum[i] = fr.F[i].adjoint() * fz[i];

    // both routes are contaminated at O(h) inside the first ring by the
    // one-sided boundary closures; the cross-check skips two rings
    double worst = 0.0;
    for (int iy = 2; iy < g.ny - 2; ++iy)
        for (int ix = 2; ix < g.nx - 2; ++ix) {
            int i = g.idx(ix, iy);
            worst = std::max(worst, frob(fr.U[i] - fr.Unum[i]));
        }
    fr.crosscheck = worst;
    if (opt.crosscheck && worst > opt.crosscheck_factor * sq(g.h()))
        throw CrossCheckFailure("analytic vs numeric Maurer-Cartan deviation " +
                                fmt17(worst) + " at h = " + fmt17(g.h()));
    return fr;
}

inline double frame_det_defect(const FrameField& fr) {
    if (!fr.has_frames) throw Error("frame_det_defect: no frames stored");
    double worst = 0.0;
    for (const Mat3& f : fr.F.v)
        worst = std::max(worst, std::abs(f.determinant() - cplx(1, 0)));
    return worst;
}

// ---------------------------------------------------------------------------
// Special lift
// ---------------------------------------------------------------------------

/// A lift with det F = 1 together with the frame it was normalized against.
/// The frame columns carry the same scalar field as the lift, so the
/// determinant is exactly 1 (re-deriving the frame from the scaled lift
/// would put O(h^2) discretization noise back into it).
struct SpecialFrame {
    LiftField lift;
    InvariantField inv;
    FrameField frame;
    ComplexField delta;  // applied S^1-valued factor
};

/// Multiply the lift by the continuous cube root of (det F)^{-1}. The
/// remaining constant cube root of unity is pinned by rotating the
/// base-node value into the sector arg in [-pi/3, pi/3).
inline SpecialFrame make_special_frame(const LiftField& lift) {
    const GridDomain& g = lift.grid;
    SpecialFrame sf;
    sf.inv = derive_invariants(lift);
    sf.frame = build_frame(lift, sf.inv);

    ComplexField detf(g);
    for (int i = 0; i < g.size(); ++i) detf[i] = sf.frame.F[i].determinant();
    RealField theta = detail::unwrap_phase(detf);

    sf.delta = ComplexField(g);
    for (int i = 0; i < g.size(); ++i)
        sf.delta[i] = std::exp(cplx(0, -theta[i] / 3.0));

    // constant cube-root-of-unity canonicalization at the base node
    const int base = g.idx(g.nx / 2, g.ny / 2);
    Vec3 fb = sf.delta[base] * lift[base];
    int comp = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(fb(k)) > std::abs(fb(comp))) comp = k;
    const cplx zeta = algebra::epsilon_pow(2);
    for (int k = 0; k < 3; ++k) {
        double ang = std::arg(std::pow(zeta, k) * fb(comp));
        if (ang >= -kPi / 3.0 && ang < kPi / 3.0) {
            if (k > 0) {
                cplx zk = std::pow(zeta, k);
                for (auto& d : sf.delta.v) d *= zk;
            }
            break;
        }
    }

    // gauge the lift, the frame, and the rho-dependent data by delta
    sf.lift = LiftField(g);
    ComplexField shift = d_z(sf.delta);
    for (int i = 0; i < g.size(); ++i) {
        cplx d = sf.delta[i];
        cplx s = shift[i] / d;  // delta^{-1} delta_z
        sf.lift[i] = d * lift[i];
        sf.frame.F[i] *= d;
        sf.frame.U[i] += s * Mat3::Identity();
        sf.frame.Unum[i] += s * Mat3::Identity();
        sf.frame.V[i] = -sf.frame.U[i].conjugate().transpose();
        sf.inv.rho[i] += s;
        sf.inv.xi[i] *= d;
        sf.inv.eta[i] *= d;
    }
    return sf;
}

inline LiftField special_lift(const LiftField& lift) {
    return make_special_frame(lift).lift;
}

// ---------------------------------------------------------------------------
// Compatibility residuals (the four scalar integrability conditions)
// ---------------------------------------------------------------------------

struct ResidualStats {
    double max = 0.0, rms = 0.0;
};

struct CompatReport {
    ResidualStats comp[4];
    int ring = 3;
    double max_any() const {
        double m = 0;
        for (auto& c : comp) m = std::max(m, c.max);
        return m;
    }
};

/// Residual fields of the four scalar compatibility conditions, evaluated
/// with chained central differences. Three boundary rings are excluded from
/// the statistics: the one-sided closures make second-derivative data O(1)
/// wrong up to two rings in.
inline CompatReport compatibility_residuals(const InvariantField& inv, int ring = 3) {
    const GridDomain& g = inv.grid;
    ComplexField af(g), bf(g), wf(g), loga(g), logb(g), logab(g), rhobar(g),
        phibar(g);
    for (int i = 0; i < g.size(); ++i) {
        af[i] = inv.a[i];
        bf[i] = inv.b[i];
        wf[i] = inv.w[i];
        loga[i] = std::log(inv.a[i]);
        logb[i] = std::log(inv.b[i]);
        logab[i] = std::log(inv.a[i] * inv.b[i]);
        rhobar[i] = std::conj(inv.rho[i]);
        phibar[i] = std::conj(inv.phi[i]);
    }
    ComplexField rho_zb = d_zbar(inv.rho), rhobar_z = d_z(rhobar);
    ComplexField loga_z = d_z(loga), logb_z = d_z(logb), w_z = d_z(wf);
    ComplexField loga_zzb = d_zbar(loga_z), logb_zzb = d_zbar(logb_z),
                 w_zzb = d_zbar(w_z);
    ComplexField phi_z = d_z(inv.phi), psi_zb = d_zbar(inv.psi), logab_z = d_z(logab);

    ComplexField phia(g), phib(g), phibara(g), phibarb(g);
    for (int i = 0; i < g.size(); ++i) {
        phia[i] = inv.phi[i] / inv.a[i];
        phib[i] = inv.phi[i] / inv.b[i];
        phibara[i] = phibar[i] / inv.a[i];
        phibarb[i] = phibar[i] / inv.b[i];
    }
    ComplexField phia_zb = d_zbar(phia), phib_zb = d_zbar(phib);
    ComplexField phibara_z = d_z(phibara), phibarb_z = d_z(phibarb);

    Field<std::array<cplx, 4>> res(g);
    for (int i = 0; i < g.size(); ++i) {
        double a = inv.a[i], b = inv.b[i], ew = inv.ew[i];
        cplx phi = inv.phi[i], psi = inv.psi[i];
        double p2 = std::norm(phi), s2 = std::norm(psi);
        cplx c1 = rho_zb[i] + rhobar_z[i] - (a - b) * ew;
        cplx c2 = loga_zzb[i] + w_zzb[i] -
                  ((b - 2 * a) * ew - phia_zb[i] - phibara_z[i] - p2 / (a * b) +
                   std::exp(-2.0 * inv.w[i]) * s2 / (a * b));
        cplx c3 = psi_zb[i] + (1.0 / a - 1.0 / b) * phibar[i] * psi +
                  (1.0 / a - 1.0 / b) * ew * phi * phi -
                  (ew * (phi_z[i] - w_z[i] * phi) - ew * phi * logab_z[i]);
        cplx c4 = logb_zzb[i] + w_zzb[i] -
                  ((a - 2 * b) * ew + phib_zb[i] + phibarb_z[i] - p2 / (a * b) +
                   std::exp(-2.0 * inv.w[i]) * s2 / (a * b));
        res[i] = {c1, c2, c3, c4};
    }

    CompatReport rep;
    rep.ring = ring;
    for (int k = 0; k < 4; ++k) {
        rep.comp[k].max = max_over_interior(res, ring, [&](const std::array<cplx, 4>& r) {
            return std::abs(r[k]);
        });
        rep.comp[k].rms = rms_over_interior(res, ring, [&](const std::array<cplx, 4>& r) {
            return std::abs(r[k]);
        });
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Primitivity classification
// ---------------------------------------------------------------------------

enum class SurfaceClass { minimal_lagrangian, minimal_nonlagrangian, flat_homogeneous, generic };

inline const char* to_string(SurfaceClass c) {
    switch (c) {
        case SurfaceClass::minimal_lagrangian: return "minimal Lagrangian";
        case SurfaceClass::minimal_nonlagrangian: return "minimal, non-Lagrangian";
        case SurfaceClass::flat_homogeneous: return "flat homogeneous";
        default: return "generic";
    }
}

struct PrimitivityReport {
    bool sigma = false, sigma2 = false, sigma3 = false;
    bool flat_homogeneous = false;
    SurfaceClass label = SurfaceClass::generic;
    double tol = 0.0;
    // max norms of the offending eigenspace components
    double sigma_mass = 0.0;   // g_1..g_4 of U plus mirror components of V
    double sigma2_mass = 0.0;  // g_1, g_4 of U; g_2, g_5 of V
    double trace_mass = 0.0;
    // frame-level invariant readings used by the flat-homogeneous branch
    double dev_w = 0.0, dev_phi = 0.0, dev_psi = 0.0, dev_ab = 0.0;
    cplx psi_mean = 0.0;
};

/// Decompose U dz + V dzbar into the eigenspaces of the order-6
/// automorphism and decide primitivity relative to sigma, sigma^2, sigma^3.
/// `tol_c` defaults to the exact-data threshold; pass ~10 h^2 for
/// finite-difference data.
inline PrimitivityReport classify_primitivity(const FrameField& fr,
                                              double tol_c = default_tol().classifier,
                                              const Tolerances& tol = default_tol()) {
    const GridDomain& g = fr.grid;
    if (fr.has_frames) {
        double dd = frame_det_defect(fr);
        if (dd > std::max(1e-6, sq(g.h())))
            throw InconsistentGauge("classify_primitivity: det F deviates by " +
                                    fmt17(dd));
    }

    PrimitivityReport rep;
    rep.tol = tol_c;

    // Two boundary rings are skipped: for finite-difference data the
    // Maurer-Cartan entries carry O(h) noise there.
    const int ring = (std::min(g.nx, g.ny) > 8) ? 2 : 0;
    std::vector<int> nodes;
    for (int iy = ring; iy < g.ny - ring; ++iy)
        for (int ix = ring; ix < g.nx - ring; ++ix) nodes.push_back(g.idx(ix, iy));

    // Frame-level invariant readings (no differentiation):
    // A = |u13|, B = |u32|, psi = u21 A B, phi = -conj(sqrt(ab) u12), rho = u33.
    std::vector<double> wv(nodes.size()), av(nodes.size());
    std::vector<cplx> phiv(nodes.size()), psiv(nodes.size());
    for (size_t n = 0; n < nodes.size(); ++n) {
        int i = nodes[n];
        const Mat3& u = fr.U[i];
        const Mat3& v = fr.V[i];
        Mat3 ut = traceless_part(u), vt = traceless_part(v);
        rep.trace_mass = std::max(rep.trace_mass,
                                  std::abs(u.trace()) + std::abs(v.trace()));
        double mu_s = 0, mv_s = 0, mu_s2 = 0, mv_s2 = 0;
        for (int k = 1; k <= 4; ++k)
            mu_s += frob(algebra::eigenspace_project(ut, k, tol.algebra * 100));
        for (int k = 2; k <= 5; ++k)
            mv_s += frob(algebra::eigenspace_project(vt, k, tol.algebra * 100));
        mu_s2 = frob(algebra::eigenspace_project(ut, 1, tol.algebra * 100)) +
                frob(algebra::eigenspace_project(ut, 4, tol.algebra * 100));
        mv_s2 = frob(algebra::eigenspace_project(vt, 2, tol.algebra * 100)) +
                frob(algebra::eigenspace_project(vt, 5, tol.algebra * 100));
        rep.sigma_mass = std::max(rep.sigma_mass, mu_s + mv_s);
        rep.sigma2_mass = std::max(rep.sigma2_mass, mu_s2 + mv_s2);

        double A = std::abs(u(0, 2)), B = std::abs(u(2, 1));
        double ew = 0.5 * (A * A + B * B);
        double a = (ew > 0) ? A * A / ew : 0.0;
        wv[n] = (ew > 0) ? std::log(ew) : 0.0;
        av[n] = a;
        psiv[n] = u(1, 0) * A * B;
        phiv[n] = std::conj(-std::sqrt(std::max(a * (2 - a), 0.0)) * u(0, 1));
    }

    rep.sigma = rep.sigma_mass < tol_c && rep.trace_mass < std::max(tol_c, 1e-8);
    rep.sigma2 = rep.sigma2_mass < tol_c;

    // Flat-homogeneous branch: a = b = 1 with w, phi, psi constant and
    // psi nonvanishing.
    cplx psi_mean = 0, phi_mean = 0;
    double w_mean = 0;
    for (size_t n = 0; n < nodes.size(); ++n) {
        psi_mean += psiv[n];
        phi_mean += phiv[n];
        w_mean += wv[n];
    }
    psi_mean /= double(nodes.size());
    phi_mean /= double(nodes.size());
    w_mean /= double(nodes.size());
    for (size_t n = 0; n < nodes.size(); ++n) {
        rep.dev_w = std::max(rep.dev_w, std::abs(wv[n] - w_mean));
        rep.dev_phi = std::max(rep.dev_phi, std::abs(phiv[n] - phi_mean));
        rep.dev_psi = std::max(rep.dev_psi, std::abs(psiv[n] - psi_mean));
        rep.dev_ab = std::max(rep.dev_ab, std::abs(av[n] - 1.0));
    }
    rep.psi_mean = psi_mean;
    double const_tol = std::max(tol_c, 10.0 * sq(g.h()));
    rep.flat_homogeneous = rep.dev_ab < const_tol && rep.dev_w < const_tol &&
                           rep.dev_phi < const_tol && rep.dev_psi < const_tol &&
                           std::abs(psi_mean) > 1e-6;
    rep.sigma3 = rep.sigma || rep.flat_homogeneous;

    if (rep.sigma)
        rep.label = SurfaceClass::minimal_lagrangian;
    else if (rep.flat_homogeneous)
        rep.label = SurfaceClass::flat_homogeneous;
    else if (rep.sigma2)
        rep.label = SurfaceClass::minimal_nonlagrangian;
    else
        rep.label = SurfaceClass::generic;
    return rep;
}

// ---------------------------------------------------------------------------
// Reconstruction: frame -> surface (Theorem-level converse)
// ---------------------------------------------------------------------------

struct ReconstructResult {
    LiftField lift;
    InvariantField recovered;   // fields read off the gauged Maurer-Cartan form
    InvariantField rederived;   // derive_invariants of the returned lift
    double match_error = 0.0;   // recovered vs rederived over the interior
};

/// Read the surface off a frame whose Maurer-Cartan form has the primitive
/// shape: gauge by a diagonal unitary so u13 = iA, u32 = iB with A, B > 0,
/// set f = (F D) e3 and recover a, b, w, phi, psi, rho from the entries.
inline ReconstructResult reconstruct_surface(const FrameField& fr,
                                             double entry_eps = default_tol().complex_point,
                                             double shape_tol = 1e-6) {
    if (!fr.has_frames)
        throw Error("reconstruct_surface: frame field carries no frames");
    const GridDomain& g = fr.grid;

    ComplexField u13(g), u32(g);
    for (int i = 0; i < g.size(); ++i) {
        const Mat3& u = fr.U[i];
        double off = std::abs(u(1, 2)) + std::abs(u(2, 0));
        if (off > shape_tol)
            throw ShapeViolation("Maurer-Cartan entries (2,3)/(3,1) are " + fmt17(off));
        if (std::abs(u(0, 2)) < entry_eps)
            throw VanishingEntry("u13 hits " + fmt17(std::abs(u(0, 2))));
        if (std::abs(u(2, 1)) < entry_eps)
            throw VanishingEntry("u32 hits " + fmt17(std::abs(u(2, 1))));
        u13[i] = u(0, 2);
        u32[i] = u(2, 1);
    }

    // Diagonal gauge D = diag(e^{i p1}, e^{i p2}, e^{i p3}), det D = 1,
    // turning u13, u32 into i|.|; phases unwrapped for smoothness.
    RealField a13 = detail::unwrap_phase(u13), a32 = detail::unwrap_phase(u32);
    RealField p1(g), p2(g), p3(g);
    for (int i = 0; i < g.size(); ++i) {
        double t1 = 0.5 * kPi - a13[i];
        double t2 = 0.5 * kPi - a32[i];
        p3[i] = (t1 - t2) / 3.0;
        p1[i] = p3[i] - t1;
        p2[i] = p3[i] + t2;
    }

    ReconstructResult out{LiftField(g), InvariantField{}, InvariantField{}, 0.0};
    InvariantField& rec = out.recovered;
    rec.grid = g;
    rec.w = RealField(g);
    rec.ew = RealField(g);
    rec.a = RealField(g);
    rec.b = RealField(g);
    rec.theta = RealField(g);
    rec.phi = ComplexField(g);
    rec.psi = ComplexField(g);
    rec.rho = ComplexField(g);

    ComplexField d3(g);
    for (int i = 0; i < g.size(); ++i) d3[i] = std::exp(cplx(0, p3[i]));
    ComplexField d3z = d_z(d3);

    for (int i = 0; i < g.size(); ++i) {
        cplx e1 = std::exp(cplx(0, p1[i])), e2 = std::exp(cplx(0, p2[i]));
        double A = std::abs(u13[i]), B = std::abs(u32[i]);
        double ew = 0.5 * (A * A + B * B);
        double a = A * A / ew, b = 2.0 - A * A / ew;
        rec.ew[i] = ew;
        rec.w[i] = std::log(ew);
        rec.a[i] = a;
        rec.b[i] = b;
        rec.theta[i] = 2.0 * std::acos(std::sqrt(0.5 * a));
        const Mat3& u = fr.U[i];
        cplx u21g = u(1, 0) * e1 / e2;      // gauged (2,1) entry
        cplx u12g = u(0, 1) * e2 / e1;      // gauged (1,2) entry
        rec.psi[i] = u21g * A * B;
        rec.phi[i] = std::conj(-std::sqrt(a * b) * u12g);  // u12 = -conj(phi)/sqrt(ab)
        rec.rho[i] = u(2, 2) + d3z[i] / d3[i];
        out.lift[i] = d3[i] * (fr.F[i] * basis_e(2));
    }

    out.rederived = derive_invariants(out.lift);
    const int ring = 2;
    double worst = 0.0;
    for (int iy = ring; iy < g.ny - ring; ++iy)
        for (int ix = ring; ix < g.nx - ring; ++ix) {
            int i = g.idx(ix, iy);
            worst = std::max({worst, std::abs(rec.a[i] - out.rederived.a[i]),
                              std::abs(rec.ew[i] - out.rederived.ew[i]),
                              std::abs(rec.psi[i] - out.rederived.psi[i]),
                              std::abs(rec.phi[i] - out.rederived.phi[i]),
                              std::abs(rec.rho[i] - out.rederived.rho[i])});
        }
    out.match_error = worst;
    return out;
}

// ---------------------------------------------------------------------------
// Congruence (same-parametrization version)
// ---------------------------------------------------------------------------

struct CongruenceReport {
    double dev_w = 0, dev_theta = 0, dev_phi = 0, dev_psi = 0;
    bool congruent = false;
    double tol = 0.0;
};

inline CongruenceReport congruence_check(const InvariantField& ia,
                                         const InvariantField& ib, int ring = 1) {
    if (!ia.grid.same_as(ib.grid)) throw GridMismatch("congruence_check");
    const GridDomain& g = ia.grid;
    CongruenceReport r;
    for (int iy = ring; iy < g.ny - ring; ++iy)
        for (int ix = ring; ix < g.nx - ring; ++ix) {
            int i = g.idx(ix, iy);
            r.dev_w = std::max(r.dev_w, std::abs(ia.w[i] - ib.w[i]));
            r.dev_theta = std::max(r.dev_theta, std::abs(ia.theta[i] - ib.theta[i]));
            r.dev_phi = std::max(r.dev_phi, std::abs(ia.phi[i] - ib.phi[i]));
            r.dev_psi = std::max(r.dev_psi, std::abs(ia.psi[i] - ib.psi[i]));
        }
    r.tol = 10.0 * sq(g.h());
    r.congruent = r.dev_w < r.tol && r.dev_theta < r.tol && r.dev_phi < r.tol &&
                  r.dev_psi < r.tol;
    return r;
}

}  // namespace minlag
