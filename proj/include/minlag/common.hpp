#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace minlag {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define MINLAG_DEFINE_ERROR(Name)                                 \
    struct Name : Error {                                         \
        explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
    }

MINLAG_DEFINE_ERROR(ComplexPointDetected);
MINLAG_DEFINE_ERROR(NonConformal);
MINLAG_DEFINE_ERROR(PhaseUnwrapFailure);
MINLAG_DEFINE_ERROR(CrossCheckFailure);
MINLAG_DEFINE_ERROR(InconsistentGauge);
MINLAG_DEFINE_ERROR(VanishingEntry);
MINLAG_DEFINE_ERROR(ShapeViolation);
MINLAG_DEFINE_ERROR(GridMismatch);
MINLAG_DEFINE_ERROR(TailOverflow);
MINLAG_DEFINE_ERROR(OutsideBigCell);
MINLAG_DEFINE_ERROR(FactorizationDiverged);
MINLAG_DEFINE_ERROR(GradingViolation);
MINLAG_DEFINE_ERROR(DegreeViolation);
MINLAG_DEFINE_ERROR(StepDiverged);
MINLAG_DEFINE_ERROR(MissingProvenance);
MINLAG_DEFINE_ERROR(VariantMismatch);
MINLAG_DEFINE_ERROR(GaugeError);
MINLAG_DEFINE_ERROR(NotUnitary);
MINLAG_DEFINE_ERROR(ChartSingular);
MINLAG_DEFINE_ERROR(ConfigError);

#undef MINLAG_DEFINE_ERROR

/// Shared numerical thresholds. One instance is threaded through the
/// pipelines; defaults match the library's documented contracts.
struct Tolerances {
    double algebra = 1e-12;        // exact finite-dimensional identities
    double unit_norm = 1e-10;      // |f| = 1 for lifts
    double complex_point = 1e-6;   // lower bound on min(a, b)
    double nonconformal = 1e-3;    // |xi . conj(eta)| e^{-w}
    double det_one = 1e-9;         // |det F - 1| after the special lift
    double crosscheck_factor = 50; // analytic vs numeric MC, units of h^2
    double classifier = 1e-6;      // primitivity component threshold (exact data)
    double classifier_fd_factor = 10; // h^2 multiplier for finite-difference data
    double tail_budget = 1e-8;     // truncated Laurent tail mass
    double birkhoff_cond_max = 1e12;
    int iwasawa_max_doublings = 8; // section growth attempts before giving up
    int loop_trunc = 12;           // default Laurent truncation degree N
};

inline const Tolerances& default_tol() {
    static const Tolerances t{};
    return t;
}

/// Shortest-%.17g formatting used by every text artifact so that
/// identical runs produce byte-identical files.
inline std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double sq(double x) { return x * x; }

/// Principal argument difference arg(b/a) in (-pi, pi].
inline double phase_step(cplx a, cplx b) {
    return std::arg(b / a);
}

}  // namespace minlag
