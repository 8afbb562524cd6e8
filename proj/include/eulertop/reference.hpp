#pragma once

// Independent reference solution for the undeformed three-dimensional top.
// The two quadratic integrals express x2 and x3 through x1, which reduces the
// system to the scalar equation
//
//     dx1/dt = r(x1) = s2 s3 sqrt((x1^2 - C1)(x1^2 - C2)),
//
// solved here by inverting the quadrature t(x1) = int dx1 / r(x1) with
// explicit branch-sign bookkeeping at turning points. Near a simple turning
// point the integrand has an integrable 1/sqrt singularity that is removed by
// the substitution u^2 = |x1 - x1_turn|; on unbounded segments the tail is
// mapped to a finite interval with w = 1/x1. Both transformed integrands are
// smooth, so the adaptive Gauss-Kronrod rule reaches ~1e-13 accuracy.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eulertop/quadrature.hpp"

namespace eulertop {

struct InadmissibleStateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BlowUpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureReduction {
    double c1 = 0.0, c2 = 0.0;   // invariant values x1^2 - x2^2, x1^2 - x3^2
    int sign2 = 1, sign3 = 1;    // branch signs of x2 and x3 at t = 0
    double x1_0 = 0.0;
    std::vector<double> turning_points;  // admissible radicand roots, sorted

    double radicand1(double x1) const { return x1 * x1 - c1; }
    double radicand2(double x1) const { return x1 * x1 - c2; }

    // |r| = sqrt(R1 R2); the sign is carried by the branch bookkeeping.
    double speed(double x1) const {
        return std::sqrt(std::max(radicand1(x1), 0.0) * std::max(radicand2(x1), 0.0));
    }
};

inline QuadratureReduction reduce(std::span<const double, 3> x0) {
    QuadratureReduction red;
    red.x1_0 = x0[0];
    red.c1 = x0[0] * x0[0] - x0[1] * x0[1];
    red.c2 = x0[0] * x0[0] - x0[2] * x0[2];
    if (red.radicand1(x0[0]) < 0.0 || red.radicand2(x0[0]) < 0.0)
        throw InadmissibleStateError("negative radicand at the initial state");
    red.sign2 = (x0[1] < 0.0) ? -1 : 1;
    red.sign3 = (x0[2] < 0.0) ? -1 : 1;

    auto add_if_admissible = [&](double root) {
        if (red.radicand1(root) >= -1e-14 && red.radicand2(root) >= -1e-14)
            red.turning_points.push_back(root);
    };
    if (red.c1 > 0.0) {
        add_if_admissible(std::sqrt(red.c1));
        add_if_admissible(-std::sqrt(red.c1));
    }
    if (red.c2 > 0.0) {
        add_if_admissible(std::sqrt(red.c2));
        add_if_admissible(-std::sqrt(red.c2));
    }
    // c = 0 puts a double root at the origin: the trajectory only reaches it
    // asymptotically, so it is a barrier rather than a turning point.
    std::sort(red.turning_points.begin(), red.turning_points.end());
    red.turning_points.erase(
        std::unique(red.turning_points.begin(), red.turning_points.end(),
                    [](double a, double b) { return std::abs(a - b) < 1e-14; }),
        red.turning_points.end());
    return red;
}

inline QuadratureReduction reduce(const std::array<double, 3>& x0) {
    return reduce(std::span<const double, 3>(x0));
}

namespace detail {

// A monotone stretch of the x1 motion: from `from` toward `barrier` in
// direction `dir`. The barrier is a turning point (finite time, direction
// reverses), an asymptotic double root (infinite time), or infinity
// (finite escape time).
struct Segment {
    double from = 0.0;
    int dir = 1;
    double barrier = 0.0;          // meaningful when kind != Unbounded
    bool barrier_flips_sign2 = false;
    bool barrier_flips_sign3 = false;
    enum class Kind { Turning, Asymptotic, Unbounded } kind = Kind::Unbounded;
    double duration = std::numeric_limits<double>::infinity();
};

class ScalarMotion {
public:
    explicit ScalarMotion(const QuadratureReduction& red, double quad_tol = 1e-14)
        : red_(red), tol_(quad_tol) {}

    // Position x1 after advancing |t| along direction of time sign(t),
    // together with the accumulated branch signs.
    struct Result {
        double x1;
        int sign2, sign3;
    };

    Result advance(double t) const {
        int s2 = red_.sign2, s3 = red_.sign3;
        if (t == 0.0) return {red_.x1_0, s2, s3};

        // dx1/dt = s2 s3 |r|; time reversal just flips the initial direction.
        const double time_sign = (t < 0.0) ? -1.0 : 1.0;
        double remaining = std::abs(t);
        double xi = red_.x1_0;
        int dir = initial_direction(xi, s2, s3, time_sign);
        if (dir == 0) return {xi, s2, s3};  // equilibrium: both radicands zero

        for (int leg = 0; leg < 64; ++leg) {
            Segment seg = classify(xi, dir);
            if (remaining < seg.duration) {
                return {invert(seg, remaining), s2, s3};
            }
            if (seg.kind == Segment::Kind::Unbounded)
                throw BlowUpError("requested time is beyond the finite escape time");
            // Asymptotic barriers have infinite duration, so reaching here
            // means a genuine turning point: flip the signs it controls.
            remaining -= seg.duration;
            xi = seg.barrier;
            if (seg.barrier_flips_sign2) s2 = -s2;
            if (seg.barrier_flips_sign3) s3 = -s3;
            dir = -dir;
        }
        throw std::runtime_error("turning-point clustering below resolution");
    }

    // Finite escape time in forward time, or +inf when the motion stays
    // bounded between turning points forever.
    double escape_time() const {
        int s2 = red_.sign2, s3 = red_.sign3;
        double xi = red_.x1_0;
        int dir = initial_direction(xi, s2, s3, 1.0);
        if (dir == 0) return std::numeric_limits<double>::infinity();
        double total = 0.0;
        for (int leg = 0; leg < 64; ++leg) {
            Segment seg = classify(xi, dir);
            if (seg.kind != Segment::Kind::Turning) {
                return (seg.kind == Segment::Kind::Unbounded)
                           ? total + seg.duration
                           : std::numeric_limits<double>::infinity();
            }
            total += seg.duration;
            xi = seg.barrier;
            dir = -dir;
        }
        return total;
    }

private:
    const QuadratureReduction& red_;
    double tol_;

    // Direction of x1 motion at xi. At a turning point the sign of dx1/dt is
    // momentarily zero; the second derivative x1 * (other radicand) decides.
    int initial_direction(double xi, int s2, int s3, double time_sign) const {
        const double r1 = red_.radicand1(xi), r2 = red_.radicand2(xi);
        const double tiny = 1e-13 * std::max(1.0, xi * xi);
        if (r1 <= tiny && r2 <= tiny) return 0;  // equilibrium on an axis
        if (r1 <= tiny || r2 <= tiny) {
            // starting exactly at a turning point: d2x1/dt2 = x1 * (other radicand)
            const double accel = xi * (r1 <= tiny ? r2 : r1);
            if (accel == 0.0) return 0;
            return accel * time_sign > 0.0 ? 1 : -1;
        }
        const double v = static_cast<double>(s2 * s3) * time_sign;
        return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
    }

    Segment classify(double xi, int dir) const {
        Segment seg;
        seg.from = xi;
        seg.dir = dir;

        // nearest admissible radicand root strictly ahead of xi
        double best = std::numeric_limits<double>::infinity();
        bool found = false;
        for (double root : red_.turning_points) {
            const double ahead = (root - xi) * dir;
            if (ahead <= 1e-14 * std::max(1.0, std::abs(xi))) continue;
            if (ahead < best) {
                best = ahead;
                seg.barrier = root;
                found = true;
            }
        }
        // a double root at the origin (c = 0) blocks the way to the far side
        if ((red_.c1 == 0.0 || red_.c2 == 0.0) && xi * static_cast<double>(dir) < 0.0) {
            const double ahead = -xi * dir;
            if (ahead < best) {
                seg.barrier = 0.0;
                seg.kind = Segment::Kind::Asymptotic;
                seg.duration = std::numeric_limits<double>::infinity();
                return seg;
            }
        }
        if (!found) {
            seg.kind = Segment::Kind::Unbounded;
            seg.duration = unbounded_time(xi, dir);
            return seg;
        }

        const double b = seg.barrier;
        const bool root1 = std::abs(red_.radicand1(b)) < 1e-12 * std::max(1.0, b * b);
        const bool root2 = std::abs(red_.radicand2(b)) < 1e-12 * std::max(1.0, b * b);
        if (root1 && root2) {
            // both radicands vanish (c1 == c2): approached asymptotically
            seg.kind = Segment::Kind::Asymptotic;
            seg.duration = std::numeric_limits<double>::infinity();
            return seg;
        }
        seg.kind = Segment::Kind::Turning;
        seg.barrier_flips_sign2 = root1;
        seg.barrier_flips_sign3 = root2;
        seg.duration = turning_time(xi, seg.barrier, dir);
        return seg;
    }

    // Time from x to the turning point at b: substitute u^2 = |b - x|. With
    // xi = b - dir u^2 the vanishing radicand factors as u^2 (u^2 - 2 b dir),
    // cancelling the 1/u singularity analytically.
    double time_from_turn(double b, double x, int dir, bool root_is_r1) const {
        const double umax = std::sqrt(std::abs(b - x));
        if (umax == 0.0) return 0.0;
        auto integrand = [&](double u) {
            const double xi = b - static_cast<double>(dir) * u * u;
            const double reduced = std::abs(u * u - 2.0 * b * static_cast<double>(dir));
            const double other = root_is_r1 ? red_.radicand2(xi) : red_.radicand1(xi);
            const double denom = std::sqrt(reduced * std::max(other, 0.0));
            return denom > 0.0 ? 2.0 / denom : 0.0;
        };
        return quad::integrate(integrand, 0.0, umax, tol_, tol_);
    }

    double turning_time(double x, double b, int dir) const {
        const bool root1 = std::abs(red_.radicand1(b)) < 1e-12 * std::max(1.0, b * b);
        return time_from_turn(b, x, dir, root1);
    }

    bool root_at(double x) const {
        const double scale = 1e-12 * std::max(1.0, x * x);
        return std::abs(red_.radicand1(x)) < scale || std::abs(red_.radicand2(x)) < scale;
    }

    // A probe point one unit of scale away from x in direction dir; used to
    // step off a singular leg start before integrating plainly.
    double off_singular_probe(double x, int dir) const {
        return x + static_cast<double>(dir) * std::max(1.0, std::abs(x));
    }

    // Time from x to infinity in direction dir. A singular start (x itself a
    // radicand root, the post-bounce case) is crossed with the u-substitution;
    // the mid range is integrated plainly; the tail maps to a finite interval
    // with w = 1/xi, where dt = dw / sqrt((1 - c1 w^2)(1 - c2 w^2)).
    double unbounded_time(double x, int dir) const {
        double t = 0.0;
        if (root_at(x)) {
            const double mid = off_singular_probe(x, dir);
            const bool root1 = std::abs(red_.radicand1(x)) < 1e-12 * std::max(1.0, x * x);
            t += time_from_turn(x, mid, -dir, root1);
            x = mid;
        }
        const double far_mag =
            std::max(2.0 * std::abs(x),
                     8.0 * std::sqrt(std::max({std::abs(red_.c1), std::abs(red_.c2), 1.0})));
        const double far = (dir > 0 ? far_mag : -far_mag);
        t += quad::integrate([&](double xi) { return 1.0 / red_.speed(xi); },
                             x, far, tol_, tol_) * static_cast<double>(dir);
        auto tail = [&](double w) {
            const double d = (1.0 - red_.c1 * w * w) * (1.0 - red_.c2 * w * w);
            return 1.0 / std::sqrt(d);
        };
        t += quad::integrate(tail, 0.0, 1.0 / far_mag, tol_, tol_);
        return t;
    }

    // Position after `elapsed` inside the segment. Monotone in x1, solved by
    // bracketing on a variable in which the time integral is smooth.
    double invert(const Segment& seg, double elapsed) const {
        if (elapsed == 0.0) return seg.from;
        const int dir = seg.dir;
        if (seg.kind == Segment::Kind::Turning || seg.kind == Segment::Kind::Asymptotic) {
            const double b = seg.barrier;
            const bool root1 = std::abs(red_.radicand1(b)) < 1e-12 * std::max(1.0, b * b);
            if (seg.kind == Segment::Kind::Turning) {
                // solve time_from_turn(u) = duration - elapsed in u-space
                const double target = seg.duration - elapsed;
                const double u_hi = std::sqrt(std::abs(b - seg.from));
                auto fn = [&](double u) {
                    const double x = b - static_cast<double>(dir) * u * u;
                    return time_from_turn(b, x, dir, root1) - target;
                };
                const double u = quad::find_root(fn, 0.0, u_hi);
                return b - static_cast<double>(dir) * u * u;
            }
            // asymptotic barrier: the sought x approaches it but never lands;
            // bracket by geometric halving of the remaining distance
            auto fn = [&](double x) {
                return quad::integrate([&](double xi) { return 1.0 / red_.speed(xi); },
                                       seg.from, x, tol_, tol_) *
                           static_cast<double>(dir) - elapsed;
            };
            double lo = seg.from;
            double probe = b - (b - seg.from) * 0.5;
            while (fn(probe) < 0.0 && std::abs(b - probe) > 1e-14 * std::max(1.0, std::abs(b))) {
                lo = probe;
                probe = b - (b - probe) * 0.5;
            }
            return quad::find_root(fn, lo, probe);
        }

        // unbounded segment. A singular start (post-bounce) is inverted in
        // u-space while the sought point is still within the substitution
        // window; past that the start is shifted to a regular probe point.
        double from = seg.from;
        double remaining = elapsed;
        if (root_at(from)) {
            const double b = from;
            const bool root1 = std::abs(red_.radicand1(b)) < 1e-12 * std::max(1.0, b * b);
            const double mid = off_singular_probe(b, dir);
            const double t_mid = time_from_turn(b, mid, -dir, root1);
            if (remaining <= t_mid) {
                auto fn = [&](double u) {
                    const double x = b + static_cast<double>(dir) * u * u;
                    return time_from_turn(b, x, -dir, root1) - remaining;
                };
                const double u = quad::find_root(fn, 0.0, std::sqrt(std::abs(mid - b)));
                return b + static_cast<double>(dir) * u * u;
            }
            remaining -= t_mid;
            from = mid;
        }
        // regular start: time-to-infinity is smooth in the tail variable
        const double total = unbounded_time(from, dir);
        const double tail_target = total - remaining;  // time-to-infinity from x
        auto time_to_inf = [&](double x) { return unbounded_time(x, dir); };
        double lo = from;
        double step = std::max(1.0, std::abs(from));
        double hi = from + dir * step;
        while (time_to_inf(hi) > tail_target) {
            lo = hi;
            step *= 2.0;
            hi = from + dir * step;
            if (step > 1e12) throw BlowUpError("requested time is beyond the finite escape time");
        }
        auto fn = [&](double x) { return time_to_inf(x) - tail_target; };
        return quad::find_root(fn, lo, hi, 1e-14 * std::max(1.0, std::abs(hi)));
    }
};

}  // namespace detail

// Reconstructed 3-state at each requested time. Accuracy target ~1e-12 for
// states of order unity; each time is solved independently from the reduction.
inline std::vector<std::array<double, 3>> reference_solution(const QuadratureReduction& red,
                                                             double x1_0,
                                                             std::span<const double> t_grid) {
    if (x1_0 != red.x1_0)
        throw std::invalid_argument("x1_0 does not match the reduction");
    detail::ScalarMotion motion(red);
    std::vector<std::array<double, 3>> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) {
        const auto r = motion.advance(t);
        const double x2 = r.sign2 * std::sqrt(std::max(red.radicand1(r.x1), 0.0));
        const double x3 = r.sign3 * std::sqrt(std::max(red.radicand2(r.x1), 0.0));
        out.push_back({r.x1, x2, x3});
    }
    return out;
}

// Forward escape time of the reduced motion (infinity when bounded).
inline double escape_time(const QuadratureReduction& red) {
    return detail::ScalarMotion(red).escape_time();
}

}  // namespace eulertop
