#pragma once

#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "minlag/algebra.hpp"

namespace minlag {

enum class Twist { untwisted, sigma };
enum class Reality { none, real_form };

/// Truncated matrix Laurent series sum_{|j| <= N} lambda^j X_j with optional
/// sigma-twist and real-form flags. Coefficients below 1e-15 of the largest
/// are pruned; mass lost to truncation accumulates in `dropped_tail`.
struct TwistedLoop {
    int N = 12;
    Twist twist = Twist::untwisted;
    Reality reality = Reality::none;
    std::map<int, Mat3> c;
    double dropped_tail = 0.0;

    static TwistedLoop identity(int N_, Twist t = Twist::untwisted,
                                Reality r = Reality::none) {
        TwistedLoop l;
        l.N = N_;
        l.twist = t;
        l.reality = r;
        l.c[0] = Mat3::Identity();
        return l;
    }

    const Mat3 coeff(int j) const {
        auto it = c.find(j);
        return it == c.end() ? Mat3::Zero() : it->second;
    }

    void set(int j, const Mat3& m) {
        if (std::abs(j) > N) throw Error("TwistedLoop::set: degree beyond truncation");
        if (frob(m) == 0.0)
            c.erase(j);
        else
            c[j] = m;
    }

    int min_degree() const { return c.empty() ? 0 : c.begin()->first; }
    int max_degree() const { return c.empty() ? 0 : c.rbegin()->first; }

    double coeff_norm() const {
        double s = 0.0;
        for (auto& [j, m] : c) s += frob(m);
        return s;
    }

    void prune(double rel = 1e-15) {
        double m0 = 0.0;
        for (auto& [j, m] : c) m0 = std::max(m0, frob(m));
        for (auto it = c.begin(); it != c.end();)
            it = (frob(it->second) < rel * m0) ? c.erase(it) : std::next(it);
    }
};

inline TwistedLoop operator+(const TwistedLoop& a, const TwistedLoop& b) {
    TwistedLoop r = a;
    r.N = std::max(a.N, b.N);
    for (auto& [j, m] : b.c) {
        auto it = r.c.find(j);
        if (it == r.c.end())
            r.c[j] = m;
        else
            it->second += m;
    }
    r.dropped_tail = std::max(a.dropped_tail, b.dropped_tail);
    return r;
}

inline TwistedLoop operator-(const TwistedLoop& a, const TwistedLoop& b) {
    TwistedLoop nb = b;
    for (auto& [j, m] : nb.c) m = -m;
    return a + nb;
}

inline TwistedLoop operator*(const TwistedLoop& a, cplx s) {
    TwistedLoop r = a;
    for (auto& [j, m] : r.c) m *= s;
    return r;
}
inline TwistedLoop operator*(const TwistedLoop& a, double s) { return a * cplx(s, 0); }

/// Evaluation at lambda0, Horner in lambda for j >= 0 and in 1/lambda for
/// j < 0.
inline Mat3 loop_eval(const TwistedLoop& l, cplx lam) {
    if (lam == cplx(0) && l.min_degree() < 0)
        throw Error("loop_eval: lambda = 0 with negative degrees present");
    Mat3 pos = Mat3::Zero(), neg = Mat3::Zero();
    for (int j = l.max_degree(); j >= 1; --j) {
        pos = pos * lam + l.coeff(j);
    }
    pos = pos * lam;
    cplx mu = (lam == cplx(0)) ? cplx(0) : 1.0 / lam;
    for (int j = l.min_degree(); j <= -1; ++j) {
        neg = neg * mu + l.coeff(j);
    }
    neg = neg * mu;
    return pos + neg + l.coeff(0);
}

/// Cauchy product truncated to [-N, N]; dropped mass is tracked and a
/// TailOverflow is raised when it exceeds the budget.
inline TwistedLoop loop_mul(const TwistedLoop& a, const TwistedLoop& b,
                            std::optional<int> trunc = std::nullopt,
                            double tail_budget = default_tol().tail_budget) {
    if (a.twist != b.twist)
        throw Error("loop_mul: incompatible twist flags");
    TwistedLoop r;
    r.N = trunc.value_or(std::max(a.N, b.N));
    r.twist = a.twist;
    r.reality = (a.reality == Reality::real_form && b.reality == Reality::real_form)
                    ? Reality::real_form
                    : Reality::none;
    r.dropped_tail = std::max(a.dropped_tail, b.dropped_tail);
    for (auto& [j, ma] : a.c)
        for (auto& [k, mb] : b.c) {
            int d = j + k;
            Mat3 prod = ma * mb;
            if (std::abs(d) <= r.N) {
                auto it = r.c.find(d);
                if (it == r.c.end())
                    r.c[d] = prod;
                else
                    it->second += prod;
            } else {
                r.dropped_tail += frob(prod);
            }
        }
    if (r.dropped_tail > tail_budget)
        throw TailOverflow("loop_mul: dropped tail " + fmt17(r.dropped_tail));
    r.prune();
    return r;
}

/// Pointwise adjoint on the circle: (L*)(lambda) = L(lambda)^H, i.e.
/// (L*)_j = (L_{-j})^H.
inline TwistedLoop loop_star(const TwistedLoop& l) {
    TwistedLoop r = l;
    r.c.clear();
    for (auto& [j, m] : l.c) r.c[-j] = m.adjoint();
    return r;
}

/// exp of a loop-algebra element by the truncated series.
inline TwistedLoop loop_exp(const TwistedLoop& x, int terms = 40) {
    TwistedLoop r = TwistedLoop::identity(x.N, x.twist, x.reality);
    TwistedLoop term = r;
    for (int k = 1; k <= terms; ++k) {
        term = loop_mul(term, x * (1.0 / k), x.N, 1e300);
        r = r + term;
        if (term.coeff_norm() < 1e-17) break;
    }
    r.dropped_tail = term.dropped_tail;
    return r;
}

/// Retruncate to [-N, N]; outside mass moves into dropped_tail.
inline TwistedLoop loop_truncate(const TwistedLoop& l, int N) {
    TwistedLoop r = l;
    r.N = N;
    r.c.clear();
    for (auto& [j, m] : l.c) {
        if (std::abs(j) <= N)
            r.c[j] = m;
        else
            r.dropped_tail += frob(m);
    }
    return r;
}

// ---------------------------------------------------------------------------
// JSON serialization: {N, twist, reality, coeffs: [{j, matrix: 18 floats}]}
// ---------------------------------------------------------------------------

inline nlohmann::json loop_to_json(const TwistedLoop& l) {
    nlohmann::json j;
    j["N"] = l.N;
    j["twist"] = (l.twist == Twist::sigma) ? "sigma" : "untwisted";
    j["reality"] = (l.reality == Reality::real_form) ? "real-form" : "none";
    j["coeffs"] = nlohmann::json::array();
    for (auto& [d, m] : l.c) {
        nlohmann::json e;
        e["j"] = d;
        std::vector<double> flat;
        flat.reserve(18);
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col) {
                flat.push_back(m(r, col).real());
                flat.push_back(m(r, col).imag());
            }
        e["matrix"] = flat;
        j["coeffs"].push_back(e);
    }
    return j;
}

inline TwistedLoop loop_from_json(const nlohmann::json& j) {
    TwistedLoop l;
    l.N = j.at("N").get<int>();
    l.twist = (j.at("twist").get<std::string>() == "sigma") ? Twist::sigma
                                                            : Twist::untwisted;
    l.reality = (j.at("reality").get<std::string>() == "real-form")
                    ? Reality::real_form
                    : Reality::none;
    for (auto& e : j.at("coeffs")) {
        auto flat = e.at("matrix").get<std::vector<double>>();
        if (flat.size() != 18) throw Error("loop_from_json: matrix needs 18 floats");
        Mat3 m;
        int p = 0;
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col) {
                m(r, col) = cplx(flat[p], flat[p + 1]);
                p += 2;
            }
        l.set(e.at("j").get<int>(), m);
    }
    return l;
}

// ---------------------------------------------------------------------------
// Membership diagnostics
// ---------------------------------------------------------------------------

inline std::vector<cplx> unit_circle_samples(int count, double offset = 0.0) {
    std::vector<cplx> s(count);
    for (int k = 0; k < count; ++k)
        s[k] = std::exp(cplx(0.0, 2.0 * kPi * (k + offset) / count));
    return s;
}

/// Algebra-level twist defect: distance of each coefficient X_j from
/// g_{j mod 6}.
inline double twist_defect_algebra(const TwistedLoop& l) {
    double worst = 0.0;
    for (auto& [j, m] : l.c) {
        Mat3 x = traceless_part(m);
        worst = std::max(worst, frob(x - algebra::eigenspace_project(x, j)) +
                                    std::abs(m.trace()));
    }
    return worst;
}

/// Group-level twist defect: max over sampled lambda of
/// | sigma(L(eps^-1 lambda)) - L(lambda) |.
inline double twist_defect_group(const TwistedLoop& l, int samples = 12) {
    double worst = 0.0;
    for (cplx lam : unit_circle_samples(samples, 0.37)) {
        Mat3 a = algebra::sigma_apply(loop_eval(l, lam / algebra::epsilon()), 1,
                                      algebra::Level::group);
        worst = std::max(worst, frob(a - loop_eval(l, lam)));
    }
    return worst;
}

/// Reality defect of an algebra loop: tau(X_j) = X_{-j} coefficient-wise.
inline double reality_defect_algebra(const TwistedLoop& l) {
    double worst = 0.0;
    for (auto& [j, m] : l.c)
        worst = std::max(worst,
                         frob(algebra::tau_apply(m, algebra::Level::algebra) -
                              l.coeff(-j)));
    return worst;
}

/// Reality defect of a group loop: max over circle samples of the unitarity
/// defect (Fix(tau) = SU(3) on the circle means tau(X_j) = X_{-j}).
inline double reality_defect_group(const TwistedLoop& l, int samples = 12) {
    double worst = 0.0;
    for (cplx lam : unit_circle_samples(samples, 0.11))
        worst = std::max(worst, unitary_defect(loop_eval(l, lam)));
    return worst;
}

// ---------------------------------------------------------------------------
// Birkhoff factorization  L = L_- L_+
// ---------------------------------------------------------------------------

struct BirkhoffResult {
    TwistedLoop minus;  // I at infinity: degrees <= 0, degree-0 part I
    TwistedLoop plus;   // degrees >= 0
    double recon_error = 0.0;
    double neg_leak = 0.0;  // residual negative-degree mass of L_-^{-1} L
};

namespace detail {

/// Solve for M = L_-^{-1} = I + sum_{k=1..K} lambda^-k M_k from the
/// Riemann-Hilbert projection equations (M L)_{-j} = 0, j = 1..K, i.e.
/// sum_k M_k L_{k-j} = -L_{-j}. The unknowns multiply from the left, so the
/// assembled system is the blockwise transpose.
inline std::map<int, Mat3> birkhoff_inverse_minus(const TwistedLoop& l, int K,
                                                  double cond_max) {
    using CMat = Eigen::MatrixXcd;
    CMat A = CMat::Zero(3 * K, 3 * K);
    CMat rhs = CMat::Zero(3 * K, 3);
    for (int j = 1; j <= K; ++j) {
        rhs.block(3 * (j - 1), 0, 3, 3) = -l.coeff(-j).transpose();
        for (int k = 1; k <= K; ++k) {
            int d = k - j;
            if (std::abs(d) <= l.N)
                A.block(3 * (j - 1), 3 * (k - 1), 3, 3) = l.coeff(d).transpose();
        }
    }
    Eigen::PartialPivLU<CMat> lu(A);
    double rcond = lu.rcond();
    if (!(rcond > 1.0 / cond_max))
        throw OutsideBigCell("birkhoff_split: block-Toeplitz system has condition "
                             "number beyond " + fmt17(cond_max));
    CMat xt = lu.solve(rhs);
    std::map<int, Mat3> m;
    m[0] = Mat3::Identity();
    for (int k = 1; k <= K; ++k) {
        Mat3 mk = xt.block(3 * (k - 1), 0, 3, 3).transpose();
        if (frob(mk) > 0) m[-k] = mk;
    }
    return m;
}

}  // namespace detail

/// Factor L = L_- L_+ with L_-(infinity) = I. The factor depth K is grown
/// adaptively until the sampled reconstruction error meets `target` (the
/// truncated factors of a generic loop have geometric tails).
inline BirkhoffResult birkhoff_split(const TwistedLoop& l,
                                     double target = 1e-9,
                                     const Tolerances& tol = default_tol()) {
    if (l.c.empty()) throw Error("birkhoff_split: empty loop");
    BirkhoffResult best;
    double best_err = std::numeric_limits<double>::infinity();
    for (int K = 2 * l.N + 6; K <= 16 * l.N + 96; K *= 2) {
        auto mcoef = detail::birkhoff_inverse_minus(l, K, tol.birkhoff_cond_max);
        TwistedLoop m;
        m.N = K;
        m.twist = l.twist;
        m.c = mcoef;

        TwistedLoop raw = l;
        raw.N = K + l.N;
        TwistedLoop prod = loop_mul(m, raw, K + l.N, 1e300);
        BirkhoffResult r;
        r.neg_leak = 0.0;
        r.plus = prod;
        r.plus.c.clear();
        for (auto& [d, mm] : prod.c) {
            if (d >= 0)
                r.plus.c[d] = mm;
            else
                r.neg_leak = std::max(r.neg_leak, frob(mm));
        }
        r.plus.twist = l.twist;

        // L_- = M^{-1} by the triangular-in-degree recursion.
        r.minus.N = K;
        r.minus.twist = l.twist;
        r.minus.c[0] = Mat3::Identity();
        for (int d = 1; d <= K; ++d) {
            Mat3 s = Mat3::Zero();
            for (int k = 1; k <= d; ++k) {
                auto it = mcoef.find(-k);
                if (it == mcoef.end()) continue;
                auto jt = r.minus.c.find(-(d - k));
                if (jt == r.minus.c.end()) continue;
                s += it->second * jt->second;
            }
            if (frob(s) > 0) r.minus.c[-d] = -s;
        }
        r.minus.prune();
        r.plus.prune();

        double err = 0.0;
        for (cplx lam : unit_circle_samples(4 * l.N + 2, 0.23)) {
            Mat3 d = loop_eval(l, lam) -
                     loop_eval(r.minus, lam) * loop_eval(r.plus, lam);
            err = std::max(err, frob(d));
        }
        r.recon_error = err;
        if (err < best_err) {
            best = r;
            best_err = err;
        }
        if (err <= target) return r;
    }
    if (best_err <= 100 * target) return best;
    // A well-conditioned solve whose reconstruction stalls at O(1) signals a
    // nontrivial partial index (the loop misses the big cell).
    if (best_err > std::sqrt(target))
        throw OutsideBigCell("birkhoff_split: reconstruction stalled at " +
                             fmt17(best_err));
    throw FactorizationDiverged("birkhoff_split: reconstruction stalled at " +
                                fmt17(best_err));
}

// ---------------------------------------------------------------------------
// Iwasawa factorization  C = F V_+  (F unitary on the circle)
// ---------------------------------------------------------------------------

struct IwasawaResult {
    TwistedLoop F;      // unitary on sampled S^1, twist inherited
    TwistedLoop Vplus;  // degrees >= 0, V_+(0) upper triangular, positive diagonal
    double recon_error = 0.0;
    double unitary_error = 0.0;
};

namespace detail {

/// Bauer's method: the lower Cholesky factor of the finite section
/// T_n = [Y_{i-j}] of the block Toeplitz operator with symbol Y converges,
/// along its last block row, to the coefficients of the spectral factor
/// Y = B B* with B(0) lower triangular. Applied to Y = X^T this yields
/// X = A* A with A = B^T, A(0) upper triangular with positive diagonal.
inline bool bauer_factor(const std::map<int, Mat3>& y, int n, int kmax,
                         std::vector<Mat3>& b_out) {
    using CMat = Eigen::MatrixXcd;
    CMat t = CMat::Zero(3 * n, 3 * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            auto it = y.find(i - j);
            if (it != y.end()) t.block(3 * i, 3 * j, 3, 3) = it->second;
        }
    Eigen::LLT<CMat> llt(t);
    if (llt.info() != Eigen::Success) return false;
    CMat L = llt.matrixL();
    b_out.assign(kmax + 1, Mat3::Zero());
    for (int k = 0; k <= kmax && k <= n - 1; ++k)
        b_out[k] = L.block(3 * (n - 1), 3 * (n - 1 - k), 3, 3);
    return true;
}

/// Series inverse of V = V0 (I + S), S strictly positive degrees.
inline TwistedLoop plus_loop_inverse(const TwistedLoop& v, int trunc) {
    Mat3 v0 = v.coeff(0);
    Eigen::FullPivLU<Mat3> lu(v0);
    if (!lu.isInvertible()) throw Error("plus_loop_inverse: singular V(0)");
    Mat3 v0i = lu.inverse();
    TwistedLoop s;
    s.N = trunc;
    s.twist = v.twist;
    for (auto& [j, m] : v.c)
        if (j > 0 && j <= trunc) s.c[j] = -(v0i * m);
    TwistedLoop acc = TwistedLoop::identity(trunc, v.twist);
    TwistedLoop term = acc;
    for (int k = 1; k <= trunc; ++k) {
        term = loop_mul(term, s, trunc, 1e300);
        if (term.c.empty()) break;
        acc = acc + term;
    }
    TwistedLoop v0il;
    v0il.N = trunc;
    v0il.twist = v.twist;
    v0il.c[0] = v0i;
    return loop_mul(acc, v0il, trunc, 1e300);
}

}  // namespace detail

/// Split C = F V_+ via matrix spectral factorization of X = C* C on the
/// circle (Hermitian positive definite by construction), using block-Toeplitz
/// Cholesky finite sections; the section size doubles until the sampled
/// reconstruction and unitarity targets hold.
inline IwasawaResult iwasawa_split(const TwistedLoop& cloop,
                                   double target = 1e-9,
                                   const Tolerances& tol = default_tol()) {
    TwistedLoop cl = cloop;
    cl.prune();
    const int span = std::max(1, cl.max_degree() - cl.min_degree());

    // X = C* C, then transpose the symbol for the Bauer step.
    TwistedLoop x = loop_mul(loop_star(cl), cl, 2 * cl.N, 1e300);
    std::map<int, Mat3> y;
    for (auto& [d, m] : x.c) y[d] = m.transpose();

    IwasawaResult best;
    double best_err = std::numeric_limits<double>::infinity();
    int n = std::max(3 * span + 8, 24);
    for (int attempt = 0; attempt < tol.iwasawa_max_doublings; ++attempt, n *= 2) {
        const int kmax = std::min(n - 1, 160);
        std::vector<Mat3> b;
        if (!detail::bauer_factor(y, n, kmax, b))
            throw OutsideBigCell("iwasawa_split: Toeplitz section not positive "
                                 "definite (C singular on the circle?)");
        IwasawaResult r;
        r.Vplus.N = kmax;
        r.Vplus.twist = cl.twist;
        for (int k = 0; k <= kmax; ++k)
            if (frob(b[k]) > 0) r.Vplus.c[k] = b[k].transpose();
        r.Vplus.prune();

        TwistedLoop vinv = detail::plus_loop_inverse(r.Vplus, kmax);
        TwistedLoop craw = cl;
        craw.N = cl.N + kmax;
        r.F = loop_mul(craw, vinv, cl.N + kmax, 1e300);
        r.F.prune(1e-14);
        r.F.twist = cl.twist;
        r.F.reality = Reality::real_form;

        double rec = 0.0, uni = 0.0;
        for (cplx lam : unit_circle_samples(std::max(16, 4 * cl.N + 2), 0.31)) {
            Mat3 fl = loop_eval(r.F, lam);
            rec = std::max(rec, frob(loop_eval(cl, lam) - fl * loop_eval(r.Vplus, lam)));
            uni = std::max(uni, unitary_defect(fl));
        }
        r.recon_error = rec;
        r.unitary_error = uni;
        double err = std::max(rec, uni);
        if (err < best_err) {
            best = r;
            best_err = err;
        }
        if (err <= target) return r;
    }
    if (best_err <= 100 * target) return best;
    throw FactorizationDiverged("iwasawa_split: error stalled at " + fmt17(best_err));
}

}  // namespace minlag
