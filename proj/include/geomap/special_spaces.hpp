#pragma once

// Einstein-space and constant-curvature diagnostics over sample grids, plus
// instance-level harnesses for the classical closure statements: constant
// curvature is preserved by geodesic pairs (Beltrami), Einstein partners of
// Einstein spaces, and the affine/homothetic rigidity of 4D Einstein spaces
// with non-constant curvature. Harnesses check supplied instances only; they
// prove nothing about arbitrary partners.

#include "geomap/mapping.hpp"

namespace geomap {

struct DiagnosisTolerances {
    double einstein = 1e-6;            // normalized traceless-Ricci residual
    double constant_curvature = 1e-6;  // normalized sectional-constancy residual
    double r_constancy = 1e-6;         // relative spread of R across the grid
    double nonconstant_factor = 100;   // "non-constant" means residual > factor * tolerance
    double r_nonvanishing = 1e-6;      // |R| must exceed this times the local curvature scale
};

struct ConstantCurvatureFit {
    double K = 0;              // least-squares fit against g_hj g_ik - g_hk g_ij
    double residual_max = 0;   // max normalized fit residual over the grid
    double K_spread = 0;       // relative spread of the per-point fit
};

struct SpaceDiagnosis {
    double einstein_residual = 0;  // max over grid of ||Ric - (R/n) g|| normalized
    std::pair<double, double> scalar_curvature_range{0, 0};
    std::optional<ConstantCurvatureFit> constant_curvature;
    bool einstein = false;
    bool scalar_nonvanishing = false;  // |R| above floor at every grid point
    double cc_residual_max = 0;        // constancy residual even when the fit is rejected
    double r_spread = 0;               // normalized spread of R
    double curvature_scale = 0;        // max ||Riem||/||g||^2 over the grid
    DiagnosisTolerances tolerances;

    bool nonconstant_curvature() const {
        return cc_residual_max > tolerances.nonconstant_factor * tolerances.constant_curvature;
    }

    json to_json() const {
        json j{{"einstein_residual", einstein_residual},
               {"R_range", {scalar_curvature_range.first, scalar_curvature_range.second}},
               {"einstein", einstein},
               {"scalar_nonvanishing", scalar_nonvanishing},
               {"constancy_residual_max", cc_residual_max},
               {"R_spread", r_spread},
               {"curvature_scale", curvature_scale},
               {"tolerances",
                {{"einstein", tolerances.einstein},
                 {"constant_curvature", tolerances.constant_curvature},
                 {"r_constancy", tolerances.r_constancy}}}};
        if (constant_curvature) {
            j["K"] = constant_curvature->K;
            j["K_residual_max"] = constant_curvature->residual_max;
            j["K_spread"] = constant_curvature->K_spread;
        } else {
            j["K"] = nullptr;
        }
        return j;
    }
};

// Grid diagnosis of one metric. The Einstein flag needs both the pointwise
// proportionality Ric = (R/n) g and spatial constancy of R: in 2D the
// proportionality is an identity, so constancy is the discriminating check.
inline SpaceDiagnosis diagnose_space(const MetricField& g, const GridSpec& grid,
                                     DiagnosisTolerances tol = {}) {
    if (grid.size() == 0) throw Error(ErrorCode::bad_job, "diagnosis requires a nonempty grid");
    int n = g.dimension();
    size_t count = grid.size();

    std::vector<double> einstein_res(count), scalar(count), kfit(count), cc_res(count), kappa(count);

    parallel_for(count, [&](size_t idx) {
        Vec x = grid.point(idx);
        CurvatureAtPoint cv = curvature(g, x);
        Mat G = g.value_at(x);
        double gnorm = G.norm();
        double gnorm2 = gnorm * gnorm;

        // Lowered curvature R_hijk and the comparison tensor W = g /\ g.
        double riem2 = 0, w2 = 0, rw = 0;
        std::vector<double> low(static_cast<size_t>(n) * n * n * n);
        for (int h = 0; h < n; ++h)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k) {
                        double r = 0;
                        for (int a = 0; a < n; ++a) r += G(h, a) * cv.riem(a, i, j, k);
                        low[(((h * n) + i) * n + j) * n + k] = r;
                        double w = G(h, j) * G(i, k) - G(h, k) * G(i, j);
                        riem2 += r * r;
                        w2 += w * w;
                        rw += r * w;
                    }
        double riem_norm = std::sqrt(riem2);
        kappa[idx] = riem_norm / gnorm2;

        double K = w2 > 0 ? rw / w2 : 0;
        kfit[idx] = K;
        double miss2 = 0;
        for (int h = 0; h < n; ++h)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k) {
                        double w = G(h, j) * G(i, k) - G(h, k) * G(i, j);
                        double d = low[(((h * n) + i) * n + j) * n + k] - K * w;
                        miss2 += d * d;
                    }
        double denom = std::max({riem_norm, std::abs(K) * std::sqrt(w2), 1e-12 * gnorm2});
        cc_res[idx] = std::sqrt(miss2) / denom;

        scalar[idx] = cv.scalar;
        Mat traceless = cv.ricci - (cv.scalar / n) * G;
        einstein_res[idx] = traceless.norm() / std::max(kappa[idx] * gnorm, 1e-300);
    });

    SpaceDiagnosis out;
    out.tolerances = tol;
    double r_min = scalar[0], r_max = scalar[0];
    for (size_t i = 0; i < count; ++i) {
        out.einstein_residual = std::max(out.einstein_residual, einstein_res[i]);
        out.cc_residual_max = std::max(out.cc_residual_max, cc_res[i]);
        out.curvature_scale = std::max(out.curvature_scale, kappa[i]);
        r_min = std::min(r_min, scalar[i]);
        r_max = std::max(r_max, scalar[i]);
    }
    out.scalar_curvature_range = {r_min, r_max};

    double r_scale = std::max({std::abs(r_min), std::abs(r_max), out.curvature_scale, 1e-12});
    out.r_spread = (r_max - r_min) / r_scale;
    out.einstein = out.einstein_residual <= tol.einstein && out.r_spread <= tol.r_constancy;

    out.scalar_nonvanishing = true;
    for (size_t i = 0; i < count; ++i)
        if (std::abs(scalar[i]) <= tol.r_nonvanishing * std::max(kappa[i], 1e-300))
            out.scalar_nonvanishing = false;

    double k_min = kfit[0], k_max = kfit[0];
    for (double k : kfit) {
        k_min = std::min(k_min, k);
        k_max = std::max(k_max, k);
    }
    double k_scale = std::max({std::abs(k_min), std::abs(k_max), out.curvature_scale, 1e-12});
    double k_spread = (k_max - k_min) / k_scale;
    if (out.cc_residual_max <= tol.constant_curvature && k_spread <= tol.constant_curvature) {
        ConstantCurvatureFit fit;
        fit.K = pairwise_mean(kfit);
        fit.residual_max = out.cc_residual_max;
        fit.K_spread = k_spread;
        out.constant_curvature = fit;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Harnesses. Precondition violations throw (they are gate failures, not test
// failures); the asserted conclusion is carried as a pass flag in the report.
// ---------------------------------------------------------------------------

struct BeltramiReport {
    double K_source = 0;
    double K_target = 0;
    bool target_constant = false;
    MappingClass classification;
    SpaceDiagnosis source, target;
    bool pass = false;

    json to_json() const {
        return json{{"K_source", K_source},        {"K_target", K_target},
                    {"target_constant", target_constant}, {"classification", classification.to_json()},
                    {"source", source.to_json()},  {"target", target.to_json()},
                    {"pass", pass}};
    }
};

inline BeltramiReport beltrami_harness(const MetricField& g, const MetricField& gbar,
                                       const GridSpec& grid, DiagnosisTolerances tol = {}) {
    BeltramiReport rep;
    rep.classification = classify_mapping(g, gbar, grid);
    if (rep.classification.label == MappingClassLabel::not_geodesic)
        throw Error(ErrorCode::precondition_violation,
                    "pair does not classify as geodesic (LC2 max " +
                        detail::format_double(rep.classification.lc2_max) + ")");
    rep.source = diagnose_space(g, grid, tol);
    if (!rep.source.constant_curvature)
        throw Error(ErrorCode::precondition_violation, "source metric is not of constant curvature");
    rep.target = diagnose_space(gbar, grid, tol);
    rep.K_source = rep.source.constant_curvature->K;
    rep.target_constant = rep.target.constant_curvature.has_value();
    if (rep.target_constant) rep.K_target = rep.target.constant_curvature->K;
    rep.pass = rep.target_constant;
    return rep;
}

struct Theorem4Report {
    double source_einstein_residual = 0;
    double target_einstein_residual = 0;
    bool target_einstein = false;
    MappingClass classification;
    bool pass = false;

    json to_json() const {
        return json{{"source_einstein_residual", source_einstein_residual},
                    {"target_einstein_residual", target_einstein_residual},
                    {"target_einstein", target_einstein},
                    {"classification", classification.to_json()},
                    {"pass", pass}};
    }
};

inline Theorem4Report theorem4_harness(const MetricField& g, const MetricField& gbar,
                                       const GridSpec& grid, DiagnosisTolerances tol = {}) {
    Theorem4Report rep;
    SpaceDiagnosis src = diagnose_space(g, grid, tol);
    rep.source_einstein_residual = src.einstein_residual;
    if (!src.einstein)
        throw Error(ErrorCode::precondition_violation, "source metric is not Einstein");
    rep.classification = classify_mapping(g, gbar, grid);
    if (rep.classification.label == MappingClassLabel::not_geodesic)
        throw Error(ErrorCode::precondition_violation, "pair does not classify as geodesic");
    SpaceDiagnosis dst = diagnose_space(gbar, grid, tol);
    rep.target_einstein_residual = dst.einstein_residual;
    rep.target_einstein = dst.einstein;
    rep.pass = dst.einstein;
    return rep;
}

struct Theorem5Report {
    MappingClassLabel classification = MappingClassLabel::not_geodesic;
    bool scalar_nonvanishing = false;
    bool requires_homothety = false;
    double homothety_constant = 0;
    SpaceDiagnosis source;
    bool pass = false;

    json to_json() const {
        return json{{"classification", mapping_class_name(classification)},
                    {"scalar_nonvanishing", scalar_nonvanishing},
                    {"requires_homothety", requires_homothety},
                    {"homothety_constant", homothety_constant},
                    {"source", source.to_json()},
                    {"pass", pass}};
    }
};

// 4D Einstein source with non-constant curvature: a geodesic partner must be
// affine, and homothetic when the scalar curvature is bounded away from zero.
inline Theorem5Report theorem5_harness(const MetricField& g, const MetricField& gbar,
                                       const GridSpec& grid, DiagnosisTolerances tol = {}) {
    if (g.dimension() != 4)
        throw Error(ErrorCode::precondition_violation, "harness requires a 4-dimensional metric");
    Theorem5Report rep;
    rep.source = diagnose_space(g, grid, tol);
    if (!rep.source.einstein)
        throw Error(ErrorCode::precondition_violation, "source metric is not Einstein");
    if (!rep.source.nonconstant_curvature())
        throw Error(ErrorCode::precondition_violation,
                    "source metric has constant curvature; hypothesis excludes it");
    MappingClass cls = classify_mapping(g, gbar, grid);
    rep.classification = cls.label;
    rep.homothety_constant = cls.homothety_constant;
    rep.scalar_nonvanishing = rep.source.scalar_nonvanishing;
    rep.requires_homothety = rep.source.scalar_nonvanishing;
    bool affine_level = cls.label == MappingClassLabel::affine ||
                        cls.label == MappingClassLabel::homothetic;
    rep.pass = rep.requires_homothety ? cls.label == MappingClassLabel::homothetic : affine_level;
    return rep;
}

}  // namespace geomap
