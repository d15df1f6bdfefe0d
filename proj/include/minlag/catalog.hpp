#pragma once

#include "minlag/dpw.hpp"
#include "minlag/gauss.hpp"

namespace minlag {
namespace catalog {

/// Flat homogeneous minimal Lagrangian torus lift:
/// f(x,y) = 3^{-1/2} (e^{i t1}, e^{i t2}, e^{i t3}),
/// t_k = sqrt(2) (cos(2 pi k/3) x + sin(2 pi k/3) y).
/// Constant invariants a = b = 1, e^w = 1/2, phi = rho = 0,
/// psi = i sqrt(2)/4 (values fixed by the symbolic oracle in the tests).
inline LiftField clifford_lift(const GridDomain& g) {
    LiftField f(g);
    const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            double x = g.x(ix), y = g.y(iy);
            Vec3 v;
            for (int k = 1; k <= 3; ++k) {
                double t = s2 * (std::cos(2 * kPi * k / 3) * x +
                                 std::sin(2 * kPi * k / 3) * y);
                v(k - 1) = std::exp(cplx(0, t)) / s3;
            }
            f.at(ix, iy) = v;
        }
    return f;
}

inline constexpr double clifford_ew = 0.5;
inline const cplx clifford_psi{0.0, 0.35355339059327373};  // i sqrt(2)/4

/// Totally geodesic (real) lift: f(z) = (2 Re z, 2 Im z, |z|^2 - 1)/(1+|z|^2).
/// a = b = 1, psi = phi = rho = 0, e^w = 2/(1+|z|^2)^2.
inline LiftField geodesic_lift(const GridDomain& g) {
    LiftField f(g);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            double x = g.x(ix), y = g.y(iy);
            double s = 1.0 + x * x + y * y;
            Vec3 v;
            v << 2 * x / s, 2 * y / s, (x * x + y * y - 1) / s;
            f.at(ix, iy) = v;
        }
    return f;
}

inline double geodesic_ew(cplx z) { return 2.0 / sq(1.0 + std::norm(z)); }

/// Holomorphic lift f = (z, 0, 1)/sqrt(1+|z|^2): every point is complex
/// (eta = 0), so invariant derivation must reject it.
inline LiftField holomorphic_lift(const GridDomain& g) {
    LiftField f(g);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            cplx z = g.z(ix, iy);
            double s = std::sqrt(1.0 + std::norm(z));
            Vec3 v;
            v << z / s, 0.0, 1.0 / s;
            f.at(ix, iy) = v;
        }
    return f;
}

/// Synthetic Maurer-Cartan datum that is primitive for sigma^2 only:
/// constant a = 1.2, b = 0.8, w = 0, phi = 0, psi = 0.3 i, rho = 0.
/// Not a surface; classification input only.
inline FrameField sigma2_synthetic_frame(const GridDomain& g) {
    FrameField fr;
    fr.grid = g;
    fr.U = MatrixField(g);
    fr.V = MatrixField(g);
    fr.has_frames = false;
    const double a = 1.2, b = 0.8, ew = 1.0;
    const cplx psi(0.0, 0.3);
    Mat3 u = detail::analytic_U(a, b, ew, 0.0, 0.0, 0.0, 0.0, 0.0, psi);
    Mat3 v = -u.conjugate().transpose().eval();
    for (int i = 0; i < g.size(); ++i) {
        fr.U[i] = u;
        fr.V[i] = v;
    }
    return fr;
}

/// Constant coefficient of the vacuum potential lambda^{-1} E dz whose
/// lambda = 1 surface is the flat homogeneous torus above (left-translated
/// to the frame-at-base-point normalization F(z0) = I):
/// E = (i/sqrt 2)(E13 + E21 + E32), an element of g_5.
inline Mat3 vacuum_coefficient() {
    return cplx(0, 1) / std::sqrt(2.0) * (Eij(1, 3) + Eij(2, 1) + Eij(3, 2));
}

inline Potential vacuum_potential(int trunc = default_tol().loop_trunc) {
    Potential p;
    p.trunc = trunc;
    PotentialTerm t;
    t.degree = -1;
    t.poly.emplace_back(0, vacuum_coefficient());
    p.terms.push_back(t);
    return p;
}

/// Vacuum plus a polynomial degree-1 term in g_1 (round-trip exercises).
inline Potential vacuum_plus_potential(int trunc = default_tol().loop_trunc) {
    Potential p = vacuum_potential(trunc);
    PotentialTerm t;
    t.degree = 1;
    Mat3 b1 = algebra::eigenspace_basis(1)[0];
    Mat3 b2 = algebra::eigenspace_basis(1)[1];
    t.poly.emplace_back(0, 0.05 * b1);
    t.poly.emplace_back(1, cplx(0.02, 0.01) * b2);
    p.terms.push_back(t);
    return p;
}

enum class EntryKind { lift, mc_datum, potential };

struct Entry {
    std::string name;
    EntryKind kind;
    std::string description;
};

inline const std::vector<Entry>& entries() {
    static const std::vector<Entry> e = {
        {"clifford", EntryKind::lift,
         "flat homogeneous minimal Lagrangian torus (constant invariants)"},
        {"geodesic", EntryKind::lift,
         "totally geodesic real projective plane (psi = 0)"},
        {"holomorphic", EntryKind::lift,
         "holomorphic lift; rejected by invariant derivation (complex points)"},
        {"sigma2", EntryKind::mc_datum,
         "synthetic Maurer-Cartan datum, primitive for sigma^2 only"},
        {"vacuum", EntryKind::potential,
         "vacuum potential lambda^-1 E dz producing the flat homogeneous torus"},
        {"vacuum_plus", EntryKind::potential,
         "vacuum potential with a polynomial degree-1 term (round trips)"},
    };
    return e;
}

inline const Entry& find_entry(const std::string& name) {
    std::string n = (name == "real") ? "geodesic" : name;
    for (auto& e : entries())
        if (e.name == n) return e;
    throw ConfigError("unknown catalog entry: " + name);
}

inline LiftField build_lift(const std::string& name, const GridDomain& g) {
    const Entry& e = find_entry(name);
    if (e.kind != EntryKind::lift)
        throw ConfigError("catalog entry is not a lift: " + name);
    if (e.name == "clifford") return clifford_lift(g);
    if (e.name == "geodesic") return geodesic_lift(g);
    return holomorphic_lift(g);
}

inline Potential named_potential(const std::string& name,
                                 int trunc = default_tol().loop_trunc) {
    const Entry& e = find_entry(name);
    if (e.kind != EntryKind::potential)
        throw ConfigError("catalog entry is not a potential: " + name);
    return (e.name == "vacuum") ? vacuum_potential(trunc) : vacuum_plus_potential(trunc);
}

struct SelfValidation {
    std::string name;
    bool ok = false;
    double invariant_dev = 0.0;  // against documented expected values
    double residual_max = 0.0;
    std::string detail;
};

/// Every loadable entry re-derives its documented invariants on a small grid
/// and checks the compatibility residuals.
inline SelfValidation self_validate(const std::string& name) {
    SelfValidation r;
    r.name = find_entry(name).name;
    GridDomain g{-0.5, 0.5, -0.5, 0.5, 41, 41};
    const double h2 = sq(g.h());
    try {
        if (r.name == "clifford" || r.name == "geodesic") {
            LiftField f = build_lift(r.name, g);
            InvariantField inv = derive_invariants(f);
            double dev = 0;
            for (int iy = 2; iy < g.ny - 2; ++iy)
                for (int ix = 2; ix < g.nx - 2; ++ix) {
                    int i = g.idx(ix, iy);
                    dev = std::max({dev, std::abs(inv.a[i] - 1.0),
                                    std::abs(inv.phi[i]), std::abs(inv.rho[i])});
                    if (r.name == "clifford")
                        dev = std::max({dev, std::abs(inv.ew[i] - clifford_ew),
                                        std::abs(inv.psi[i] - clifford_psi)});
                    else
                        dev = std::max({dev, std::abs(inv.psi[i]),
                                        std::abs(inv.ew[i] - geodesic_ew(g.z(ix, iy)))});
                }
            r.invariant_dev = dev;
            r.residual_max = compatibility_residuals(inv).max_any();
            r.ok = dev < 10 * h2 && r.residual_max < 50 * h2;
        } else if (r.name == "holomorphic") {
            try {
                derive_invariants(build_lift(r.name, g));
                r.detail = "expected ComplexPointDetected";
            } catch (const ComplexPointDetected&) {
                r.ok = true;
            }
        } else if (r.name == "sigma2") {
            PrimitivityReport rep = classify_primitivity(sigma2_synthetic_frame(g));
            r.ok = !rep.sigma && rep.sigma2 && !rep.sigma3;
        } else {
            validate_potential(named_potential(r.name));
            r.ok = true;
        }
    } catch (const Error& err) {
        r.ok = false;
        r.detail = err.what();
    }
    return r;
}

}  // namespace catalog
}  // namespace minlag
