#pragma once

// Geodesic integration (classical fixed-step RK4) and the pre-geodesic test:
// whether a stored curve is, up to reparametrization, a geodesic of a given
// metric. The test estimates the curve's acceleration from its own samples,
// so it checks the curve as data rather than re-deriving it from the metric.

#include "geomap/geometry.hpp"
#include "geomap/report.hpp"

#include <fstream>
#include <ostream>

namespace geomap {

struct GeodesicState {
    Vec position;
    Vec velocity;
    double parameter = 0;
};

enum class TerminationReason { span_complete, left_domain, error };

inline const char* termination_reason_name(TerminationReason r) {
    switch (r) {
        case TerminationReason::span_complete: return "span complete";
        case TerminationReason::left_domain: return "left domain";
        case TerminationReason::error: return "error";
    }
    return "?";
}

struct Trajectory {
    std::vector<GeodesicState> states;
    double step = 0;
    TerminationReason reason = TerminationReason::span_complete;
    std::string error_message;
};

namespace detail {

// Geodesic acceleration: a^h = -Gamma^h_ij v^i v^j.
inline Vec geodesic_acceleration(const MetricField& g, const Vec& x, const Vec& v) {
    ConnectionCoefficients G = christoffel(g, x);
    int n = G.n;
    Vec a = Vec::Zero(n);
    for (int h = 0; h < n; ++h) {
        double s = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s += G(h, i, j) * v[i] * v[j];
        a[h] = -s;
    }
    return a;
}

}  // namespace detail

// Integrates x'' + Gamma(x)(x',x') = 0 from s0 over a parameter span t_end
// with fixed step size. The actual step is t_end/N for the nearest integer N,
// recorded in the result. Stops early (without appending the outside state)
// when the next step leaves the chart.
inline Trajectory integrate_geodesic(const MetricField& g, const GeodesicState& s0, double t_end,
                                     double step = 1e-3) {
    if (!(step > 0)) throw Error(ErrorCode::bad_job, "step must be positive");
    if (!(t_end > 0)) throw Error(ErrorCode::bad_job, "t_end must be positive");
    g.require_in_domain(s0.position);

    long n_steps = std::max(1L, std::lround(t_end / step));
    double h = t_end / static_cast<double>(n_steps);

    Trajectory traj;
    traj.step = h;
    traj.states.push_back(s0);

    Vec x = s0.position, v = s0.velocity;
    for (long i = 0; i < n_steps; ++i) {
        Vec k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
        try {
            k1x = v;
            k1v = detail::geodesic_acceleration(g, x, v);
            Vec x2 = x + 0.5 * h * k1x, v2 = v + 0.5 * h * k1v;
            if (!g.domain().contains(x2)) { traj.reason = TerminationReason::left_domain; return traj; }
            k2x = v2;
            k2v = detail::geodesic_acceleration(g, x2, v2);
            Vec x3 = x + 0.5 * h * k2x, v3 = v + 0.5 * h * k2v;
            if (!g.domain().contains(x3)) { traj.reason = TerminationReason::left_domain; return traj; }
            k3x = v3;
            k3v = detail::geodesic_acceleration(g, x3, v3);
            Vec x4 = x + h * k3x, v4 = v + h * k3v;
            if (!g.domain().contains(x4)) { traj.reason = TerminationReason::left_domain; return traj; }
            k4x = v4;
            k4v = detail::geodesic_acceleration(g, x4, v4);
        } catch (const Error& e) {
            traj.reason = TerminationReason::error;
            traj.error_message = e.what();
            return traj;
        }
        Vec xn = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x);
        Vec vn = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v);
        if (!g.domain().contains(xn)) {
            traj.reason = TerminationReason::left_domain;
            return traj;
        }
        x = xn;
        v = vn;
        traj.states.push_back({x, v, s0.parameter + h * static_cast<double>(i + 1)});
    }
    traj.reason = TerminationReason::span_complete;
    return traj;
}

// Pre-geodesic residual of a stored curve against a metric h: the covariant
// acceleration A = x'' + Gamma(h)(x',x') must be parallel to x'. Per point:
//   ||A - (h(A,x')/h(x',x')) x'|| / (||A|| + ||x'||^2)
// x'' comes from 4th-order central differences of the stored velocities, so
// only interior states (two from each end) are evaluated.
inline ResidualReport pregeodesic_residual(const Trajectory& curve, const MetricField& h) {
    const auto& st = curve.states;
    if (st.size() < 5)
        throw Error(ErrorCode::too_few_points, "pre-geodesic test needs at least 5 states");
    int n = static_cast<int>(st.front().position.size());
    if (n != h.dimension())
        throw Error(ErrorCode::dimension_mismatch, "curve/metric dimension mismatch");
    double dt = curve.step;

    ResidualReport rep;
    rep.equation = EquationTag::pregeodesic;
    rep.normalization = "||A - proj_v A|| / (||A|| + ||v||^2)";

    for (size_t i = 2; i + 2 < st.size(); ++i) {
        const Vec& v = st[i].velocity;
        Vec accel = (st[i - 2].velocity - 8.0 * st[i - 1].velocity + 8.0 * st[i + 1].velocity -
                     st[i + 2].velocity) /
                    (12.0 * dt);
        Mat H = h.value_at(st[i].position);
        double hvv = v.dot(H * v);
        double floor = 1e-10 * v.squaredNorm() * H.norm();
        if (std::abs(hvv) < floor)
            throw Error(ErrorCode::null_tangent, "tangent is null for the test metric");

        Vec A = accel + [&] {
            ConnectionCoefficients G = christoffel(h, st[i].position);
            Vec corr = Vec::Zero(n);
            for (int hh = 0; hh < n; ++hh) {
                double s = 0;
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) s += G(hh, a, b) * v[a] * v[b];
                corr[hh] = s;
            }
            return corr;
        }();
        double proj = v.dot(H * A) / hvv;
        double resid = (A - proj * v).norm() / (A.norm() + v.squaredNorm());
        rep.per_point.push_back(resid);
        rep.points.push_back(st[i].position);
    }
    if (rep.per_point.empty())
        throw Error(ErrorCode::too_few_points, "no interior states to evaluate");
    rep.finalize();
    return rep;
}

// CSV export: header t,x1,...,xn,v1,...,vn; one row per state.
inline void export_trajectory_csv(const Trajectory& traj, std::ostream& os) {
    int n = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().position.size());
    os << "t";
    for (int k = 1; k <= n; ++k) os << ",x" << k;
    for (int k = 1; k <= n; ++k) os << ",v" << k;
    os << "\n";
    for (const auto& s : traj.states) {
        os << detail::format_double(s.parameter);
        for (int k = 0; k < n; ++k) os << "," << detail::format_double(s.position[k]);
        for (int k = 0; k < n; ++k) os << "," << detail::format_double(s.velocity[k]);
        os << "\n";
    }
}

}  // namespace geomap
