#pragma once

// Geodesic-mapping criterion stack for a metric pair (g, gbar) on a common
// chart:
//   * Psi and psi = dPsi from the determinant formula,
//   * the Levi-Civita first-order residual (tag LC2),
//   * the linear-system transform to (a, lambda) in both index positions and
//     its residuals (tags SIN3 covariant, SIN6 contravariant),
//   * metric reconstruction from (g, a),
//   * classification of the pair (not geodesic / nontrivial / affine /
//     homothetic).
//
// Derived a- and lambda-fields are built as closed-form expressions in the
// chart coordinates, so their covariant derivatives come from exact jets;
// grid-sampled tensor data is not representable here by construction.

#include "geomap/geometry.hpp"
#include "geomap/report.hpp"

#include <array>

namespace geomap {

struct MappingTolerances {
    double lc = 1e-6;         // normalized LC2 residual gate for geodesy
    double psi = 1e-7;        // g-norm of psi gate for affinity
    double homothety = 1e-8;  // relative spread of the gbar/g ratio
};

// The mapping objects at a single point.
struct MappingData {
    double psi_scalar = 0;  // Psi
    Vec psi_covector;       // psi_i
    Mat a_lower;            // a_ij
    Mat a_upper;            // a^{ij}
    Vec lambda_lower;       // lambda_i
    Vec lambda_upper;       // lambda^i
};

enum class MappingClassLabel { not_geodesic, nontrivial_geodesic, affine, homothetic };

inline const char* mapping_class_name(MappingClassLabel l) {
    switch (l) {
        case MappingClassLabel::not_geodesic: return "not_geodesic";
        case MappingClassLabel::nontrivial_geodesic: return "nontrivial_geodesic";
        case MappingClassLabel::affine: return "affine";
        case MappingClassLabel::homothetic: return "homothetic";
    }
    return "?";
}

inline MappingClassLabel mapping_class_from_name(const std::string& s) {
    if (s == "not_geodesic") return MappingClassLabel::not_geodesic;
    if (s == "nontrivial_geodesic") return MappingClassLabel::nontrivial_geodesic;
    if (s == "affine") return MappingClassLabel::affine;
    if (s == "homothetic") return MappingClassLabel::homothetic;
    throw Error(ErrorCode::bad_job, "unknown mapping class \"" + s + "\"");
}

struct MappingClass {
    MappingClassLabel label = MappingClassLabel::not_geodesic;
    // Witness data: everything the decision was based on.
    double lc2_max = 0;
    double psi_gnorm_max = 0;
    double homothety_constant = 0;
    double homothety_spread = 0;     // relative spread of the per-point ratio
    double homothety_deviation = 0;  // relative size of gbar - c*g
    bool signature_mismatch = false;
    MappingTolerances tolerances;

    json to_json() const {
        return json{{"label", mapping_class_name(label)},
                    {"lc2_max", lc2_max},
                    {"psi_gnorm_max", psi_gnorm_max},
                    {"homothety_constant", homothety_constant},
                    {"homothety_spread", homothety_spread},
                    {"homothety_deviation", homothety_deviation},
                    {"signature_mismatch", signature_mismatch},
                    {"tolerances",
                     {{"lc", tolerances.lc}, {"psi", tolerances.psi}, {"homothety", tolerances.homothety}}}};
    }
};

namespace detail {

inline void check_same_chart(const MetricField& g, const MetricField& gbar) {
    if (g.dimension() != gbar.dimension())
        throw Error(ErrorCode::dimension_mismatch, "metric pair dimension mismatch");
}

inline double checked_det(const Mat& m, const char* what) {
    double det = m.determinant();
    if (std::abs(det) < degeneracy_floor(m))
        throw Error(ErrorCode::degenerate_metric, std::string(what) + " degenerate at point");
    return det;
}

struct PsiAtPoint {
    double psi = 0;
    Vec dpsi;
    Mat ginv, gbarinv;
    bool abs_kink = false;
};

// Psi = ln|det gbar / det g| / (2(n+1)); dPsi from the adjugate identity
// d_i ln|det m| = m^{jk} d_i m_jk.
inline PsiAtPoint psi_from_jets(const SymTensorJets& Jg, const SymTensorJets& Jb) {
    int n = Jg.n;
    PsiAtPoint out;
    checked_det(Jg.value, "metric g");
    checked_det(Jb.value, "metric gbar");
    out.ginv = Jg.value.inverse();
    out.gbarinv = Jb.value.inverse();
    out.abs_kink = Jg.abs_kink || Jb.abs_kink;
    double logdet_g = std::log(std::abs(Jg.value.determinant()));
    double logdet_b = std::log(std::abs(Jb.value.determinant()));
    double c = 1.0 / (2.0 * (n + 1));
    out.psi = c * (logdet_b - logdet_g);
    out.dpsi = Vec::Zero(n);
    for (int k = 0; k < n; ++k) {
        double tb = (out.gbarinv.array() * Jb.d1[k].array()).sum();
        double tg = (out.ginv.array() * Jg.d1[k].array()).sum();
        out.dpsi[k] = c * (tb - tg);
    }
    return out;
}

}  // namespace detail

// Psi and psi_i of the pair at a point.
inline std::pair<double, Vec> compute_psi(const MetricField& g, const MetricField& gbar,
                                          const Vec& point) {
    detail::check_same_chart(g, gbar);
    SymTensorJets Jg = g.jets_at(point, /*with_second=*/false);
    SymTensorJets Jb = gbar.jets_at(point, /*with_second=*/false);
    detail::PsiAtPoint p = detail::psi_from_jets(Jg, Jb);
    return {p.psi, p.dpsi};
}

namespace detail {

struct PairScan {
    ResidualReport lc2;
    double psi_gnorm_max = 0;
    std::vector<double> ratio;      // tr(g^-1 gbar)/n per point
    double deviation_max = 0;       // max ||gbar - c_p g|| / ||g||
};

// One grid pass computing the LC2 residual and the classification witnesses.
inline PairScan scan_pair(const MetricField& g, const MetricField& gbar, const GridSpec& grid) {
    check_same_chart(g, gbar);
    int n = g.dimension();
    size_t count = grid.size();

    PairScan scan;
    scan.lc2.equation = EquationTag::lc2;
    scan.lc2.grid = grid;
    scan.lc2.normalization = "max|component| / (||gbar||_F * (1 + ||psi||))";
    scan.lc2.signature_mismatch = g.signature().negatives() != gbar.signature().negatives();
    scan.lc2.per_point.assign(count, 0.0);
    scan.lc2.points.assign(count, Vec());
    scan.ratio.assign(count, 0.0);

    std::vector<double> psi_gnorm(count, 0.0), deviation(count, 0.0);
    std::vector<int> kinks(count, 0);

    parallel_for(count, [&](size_t idx) {
        Vec x = grid.point(idx);
        SymTensorJets Jg = g.jets_at(x, /*with_second=*/false);
        SymTensorJets Jb = gbar.jets_at(x, /*with_second=*/false);
        PsiAtPoint p = psi_from_jets(Jg, Jb);
        ConnectionCoefficients G = christoffel_from_jets(Jg, p.ginv, x);

        double worst = 0;
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double nabla = Jb.d1[k](i, j);
                    for (int a = 0; a < n; ++a)
                        nabla -= G(a, k, i) * Jb.value(a, j) + G(a, k, j) * Jb.value(i, a);
                    double resid = nabla - 2.0 * p.dpsi[k] * Jb.value(i, j) -
                                   p.dpsi[i] * Jb.value(j, k) - p.dpsi[j] * Jb.value(i, k);
                    worst = std::max(worst, std::abs(resid));
                }
        double norm = Jb.value.norm() * (1.0 + p.dpsi.norm());
        scan.lc2.per_point[idx] = worst / norm;
        scan.lc2.points[idx] = x;
        kinks[idx] = (p.abs_kink || Jg.abs_kink || Jb.abs_kink) ? 1 : 0;

        psi_gnorm[idx] = std::sqrt(std::abs(p.dpsi.dot(p.ginv * p.dpsi)));
        double c = (p.ginv * Jb.value).trace() / n;
        scan.ratio[idx] = c;
        deviation[idx] = (Jb.value - c * Jg.value).norm() / Jg.value.norm();
    });

    scan.lc2.flagged_points = 0;
    for (int k : kinks) scan.lc2.flagged_points += k;
    scan.lc2.finalize();
    for (double v : psi_gnorm) scan.psi_gnorm_max = std::max(scan.psi_gnorm_max, v);
    for (double v : deviation) scan.deviation_max = std::max(scan.deviation_max, v);
    return scan;
}

}  // namespace detail

// Residual of the first-order criterion system of the pair, with the
// connection of g and psi recomputed from the determinant formula (never
// fitted from the residual itself).
inline ResidualReport levi_civita_residual(const MetricField& g, const MetricField& gbar,
                                           const GridSpec& grid) {
    return detail::scan_pair(g, gbar, grid).lc2;
}

// Forward transform of the pair into the linear-system unknowns at a point:
//   a_ij = e^{2Psi} gbar^{ab} g_ai g_bj        lambda_i = -e^{2Psi} gbar^{ab} g_bi psi_a
//   a^{ij} = e^{2Psi} gbar^{ij}                lambda^i = -psi_a a^{ai}
inline MappingData sinyukov_forward(const MetricField& g, const MetricField& gbar, const Vec& point) {
    detail::check_same_chart(g, gbar);
    SymTensorJets Jg = g.jets_at(point, /*with_second=*/false);
    SymTensorJets Jb = gbar.jets_at(point, /*with_second=*/false);
    detail::PsiAtPoint p = detail::psi_from_jets(Jg, Jb);
    double e2p = std::exp(2.0 * p.psi);

    MappingData md;
    md.psi_scalar = p.psi;
    md.psi_covector = p.dpsi;
    md.a_upper = e2p * p.gbarinv;
    md.a_lower = Jg.value * md.a_upper * Jg.value;
    md.lambda_upper = -(md.a_upper * p.dpsi);
    md.lambda_lower = Jg.value * md.lambda_upper;
    return md;
}

// ---------------------------------------------------------------------------
// Expression-level construction of the derived fields.
// ---------------------------------------------------------------------------

namespace detail {

// Determinant of a symmetric expression matrix by cofactor expansion; the
// result shares the component subtrees.
inline ExprPtr det_ast(const SymExprField& m, std::vector<int> rows, std::vector<int> cols) {
    size_t k = rows.size();
    if (k == 1) return m.component(rows[0], cols[0]).root();
    ExprPtr acc = ast::number(0.0);
    for (size_t c = 0; c < k; ++c) {
        std::vector<int> sub_rows(rows.begin() + 1, rows.end());
        std::vector<int> sub_cols;
        for (size_t cc = 0; cc < k; ++cc)
            if (cc != c) sub_cols.push_back(cols[cc]);
        ExprPtr term = ast::mul(m.component(rows[0], cols[c]).root(), det_ast(m, sub_rows, sub_cols));
        acc = (c % 2 == 0) ? ast::add(acc, term) : ast::sub(acc, term);
    }
    return acc;
}

inline ExprPtr det_ast(const SymExprField& m) {
    std::vector<int> idx(m.dimension());
    for (int i = 0; i < m.dimension(); ++i) idx[i] = i;
    return det_ast(m, idx, idx);
}

// Inverse of a symmetric expression matrix: cofactor / det, packed upper.
inline SymExprField inverse_field_ast(const SymExprField& m) {
    int n = m.dimension();
    ExprPtr det = det_ast(m);
    std::vector<ExprAST> packed;
    packed.reserve(sym_size(n));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            std::vector<int> rows, cols;
            for (int r = 0; r < n; ++r)
                if (r != i) rows.push_back(r);
            for (int c = 0; c < n; ++c)
                if (c != j) cols.push_back(c);
            ExprPtr cof;
            if (rows.empty()) {
                cof = ast::number(1.0);
            } else {
                cof = det_ast(m, rows, cols);
            }
            if ((i + j) % 2 == 1) cof = ast::neg(cof);
            packed.push_back(ExprAST(ast::div(cof, det), n));
        }
    return SymExprField(n, std::move(packed));
}

}  // namespace detail

// The derived fields of a pair as closed-form expressions, with Psi and its
// gradient obtained symbolically so every later derivative is an exact jet.
struct SinyukovFields {
    SymExprField a_lower;
    SymExprField a_upper;
    VecExprField lambda_lower;
    VecExprField lambda_upper;
    ExprAST psi;
};

inline SinyukovFields sinyukov_forward_fields(const MetricField& g, const MetricField& gbar) {
    detail::check_same_chart(g, gbar);
    int n = g.dimension();
    const SymExprField& gf = g.components();
    const SymExprField& bf = gbar.components();

    ExprPtr det_g = detail::det_ast(gf);
    ExprPtr det_b = detail::det_ast(bf);
    ExprPtr psi = ast::mul(ast::number(1.0 / (2.0 * (n + 1))),
                           ast::ln(ast::abs(ast::div(det_b, det_g))));
    ExprPtr e2p = ast::exp(ast::mul(ast::number(2.0), psi));

    SymExprField gbar_inv = detail::inverse_field_ast(bf);

    std::vector<ExprAST> a_upper;
    a_upper.reserve(sym_size(n));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            a_upper.push_back(ExprAST(ast::mul(e2p, gbar_inv.component(i, j).root()), n));
    SymExprField a_upper_field(n, std::move(a_upper));

    std::vector<ExprAST> a_lower;
    a_lower.reserve(sym_size(n));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            ExprPtr acc = ast::number(0.0);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    acc = ast::add(acc, ast::mul(gf.component(a, i).root(),
                                                 ast::mul(gf.component(b, j).root(),
                                                          a_upper_field.component(a, b).root())));
            a_lower.push_back(ExprAST(acc, n));
        }

    ExprAST psi_ast(psi, n);
    std::vector<ExprAST> dpsi;
    dpsi.reserve(n);
    for (int k = 1; k <= n; ++k) dpsi.push_back(differentiate(psi_ast, k));

    std::vector<ExprAST> lambda_upper;
    lambda_upper.reserve(n);
    for (int i = 0; i < n; ++i) {
        ExprPtr acc = ast::number(0.0);
        for (int a = 0; a < n; ++a)
            acc = ast::add(acc, ast::mul(dpsi[a].root(), a_upper_field.component(a, i).root()));
        lambda_upper.push_back(ExprAST(ast::neg(acc), n));
    }
    VecExprField lambda_upper_field(n, lambda_upper);

    std::vector<ExprAST> lambda_lower;
    lambda_lower.reserve(n);
    for (int i = 0; i < n; ++i) {
        ExprPtr acc = ast::number(0.0);
        for (int b = 0; b < n; ++b)
            acc = ast::add(acc, ast::mul(gf.component(i, b).root(), lambda_upper[b].root()));
        lambda_lower.push_back(ExprAST(acc, n));
    }

    return SinyukovFields{SymExprField(n, std::move(a_lower)), std::move(a_upper_field),
                          VecExprField(n, std::move(lambda_lower)), std::move(lambda_upper_field),
                          psi_ast};
}

// lambda^i = 1/2 g^{ik} d_k (a^{ab} g_ab) from a contravariant a-field.
inline Vec lambda_from_trace(const MetricField& g, const SymExprField& a_upper, const Vec& point) {
    if (a_upper.dimension() != g.dimension())
        throw Error(ErrorCode::dimension_mismatch, "a-field/metric dimension mismatch");
    int n = g.dimension();
    SymTensorJets Jg = g.jets_at(point, /*with_second=*/false);
    SymTensorJets Ja = a_upper.jets_at(point, /*with_second=*/false);
    Mat ginv = detail::checked_inverse(Jg.value, "metric");
    Vec dtrace = Vec::Zero(n);
    for (int k = 0; k < n; ++k)
        dtrace[k] = (Ja.d1[k].array() * Jg.value.array()).sum() +
                    (Ja.value.array() * Jg.d1[k].array()).sum();
    return 0.5 * (ginv * dtrace);
}

// Covariant variant: lambda_i = d_i (1/2 a_ab g^{ab}) from a covariant a-field.
inline Vec lambda_from_trace_covariant(const MetricField& g, const SymExprField& a_lower,
                                       const Vec& point) {
    if (a_lower.dimension() != g.dimension())
        throw Error(ErrorCode::dimension_mismatch, "a-field/metric dimension mismatch");
    int n = g.dimension();
    SymTensorJets Jg = g.jets_at(point, /*with_second=*/false);
    SymTensorJets Ja = a_lower.jets_at(point, /*with_second=*/false);
    Mat ginv = detail::checked_inverse(Jg.value, "metric");
    Vec dtrace = Vec::Zero(n);
    for (int k = 0; k < n; ++k) {
        Mat dginv = -(ginv * Jg.d1[k] * ginv);
        dtrace[k] = (Ja.d1[k].array() * ginv.array()).sum() +
                    (Ja.value.array() * dginv.array()).sum();
    }
    return 0.5 * dtrace;
}

// ---------------------------------------------------------------------------
// Linear-system residuals, covariant and contravariant routes.
// ---------------------------------------------------------------------------

struct SinyukovResiduals {
    ResidualReport sin3;
    ResidualReport sin6;

    const ResidualReport& larger() const { return sin6.max > sin3.max ? sin6 : sin3; }
};

inline SinyukovResiduals sinyukov_residual(const MetricField& g, const SymExprField& a_lower,
                                           const VecExprField& lambda_lower,
                                           const SymExprField& a_upper,
                                           const VecExprField& lambda_upper, const GridSpec& grid) {
    int n = g.dimension();
    if (a_lower.dimension() != n || a_upper.dimension() != n || lambda_lower.dimension() != n ||
        lambda_upper.dimension() != n)
        throw Error(ErrorCode::dimension_mismatch, "field/metric dimension mismatch");
    size_t count = grid.size();

    SinyukovResiduals out;
    out.sin3.equation = EquationTag::sin3;
    out.sin3.grid = grid;
    out.sin3.normalization = "max|component| / (||a||_F * (1 + ||lambda||))";
    out.sin3.per_point.assign(count, 0.0);
    out.sin3.points.assign(count, Vec());
    out.sin6 = out.sin3;
    out.sin6.equation = EquationTag::sin6;

    std::vector<int> kinks(count, 0);

    parallel_for(count, [&](size_t idx) {
        Vec x = grid.point(idx);
        SymTensorJets Jg = g.jets_at(x, /*with_second=*/false);
        Mat ginv = detail::checked_inverse(Jg.value, "metric");
        ConnectionCoefficients G = detail::christoffel_from_jets(Jg, ginv, x);

        SymTensorJets Ja = a_lower.jets_at(x, /*with_second=*/false);
        SymTensorJets Jau = a_upper.jets_at(x, /*with_second=*/false);
        Vec lam = lambda_lower.value_at(x);
        Vec lamu = lambda_upper.value_at(x);
        kinks[idx] = (Ja.abs_kink || Jau.abs_kink || Jg.abs_kink) ? 1 : 0;

        double worst3 = 0;
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double nabla = Ja.d1[k](i, j);
                    for (int a = 0; a < n; ++a)
                        nabla -= G(a, k, i) * Ja.value(a, j) + G(a, k, j) * Ja.value(i, a);
                    double resid = nabla - lam[i] * Jg.value(j, k) - lam[j] * Jg.value(i, k);
                    worst3 = std::max(worst3, std::abs(resid));
                }
        out.sin3.per_point[idx] = worst3 / (Ja.value.norm() * (1.0 + lam.norm()));
        out.sin3.points[idx] = x;

        double worst6 = 0;
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double nabla = Jau.d1[k](i, j);
                    for (int a = 0; a < n; ++a)
                        nabla += G(i, k, a) * Jau.value(a, j) + G(j, k, a) * Jau.value(i, a);
                    double resid = nabla - lamu[i] * (j == k ? 1.0 : 0.0) -
                                   lamu[j] * (i == k ? 1.0 : 0.0);
                    worst6 = std::max(worst6, std::abs(resid));
                }
        out.sin6.per_point[idx] = worst6 / (Jau.value.norm() * (1.0 + lamu.norm()));
        out.sin6.points[idx] = x;
    });

    int flagged = 0;
    for (int k : kinks) flagged += k;
    out.sin3.flagged_points = flagged;
    out.sin6.flagged_points = flagged;
    out.sin3.finalize();
    out.sin6.finalize();
    return out;
}

inline SinyukovResiduals sinyukov_residual(const MetricField& g, const SinyukovFields& fields,
                                           const GridSpec& grid) {
    return sinyukov_residual(g, fields.a_lower, fields.lambda_lower, fields.a_upper,
                             fields.lambda_upper, grid);
}

// Covariant-data-only entry point: the contravariant route is obtained by
// raising with g, which commutes with the covariant derivative.
inline SinyukovResiduals sinyukov_residual(const MetricField& g, const SymExprField& a_lower,
                                           const VecExprField& lambda_lower, const GridSpec& grid) {
    int n = g.dimension();
    SymExprField ginv_ast = detail::inverse_field_ast(g.components());
    std::vector<ExprAST> a_upper;
    a_upper.reserve(sym_size(n));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            ExprPtr acc = ast::number(0.0);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    acc = ast::add(acc, ast::mul(ginv_ast.component(i, a).root(),
                                                 ast::mul(ginv_ast.component(j, b).root(),
                                                          a_lower.component(a, b).root())));
            a_upper.push_back(ExprAST(acc, n));
        }
    std::vector<ExprAST> lambda_upper;
    lambda_upper.reserve(n);
    for (int i = 0; i < n; ++i) {
        ExprPtr acc = ast::number(0.0);
        for (int a = 0; a < n; ++a)
            acc = ast::add(acc, ast::mul(ginv_ast.component(i, a).root(),
                                         lambda_lower.component(a).root()));
        lambda_upper.push_back(ExprAST(acc, n));
    }
    return sinyukov_residual(g, a_lower, lambda_lower, SymExprField(n, std::move(a_upper)),
                             VecExprField(n, std::move(lambda_upper)), grid);
}

// ---------------------------------------------------------------------------
// Reconstruction of gbar from (g, a).
// ---------------------------------------------------------------------------

// Matrix-level core: ghat = (g^{ia} g^{jb} a_ab)^{-1}, Psi = ln|det ghat /
// det g| / 2, gbar = e^{2Psi} ghat.
inline std::pair<Mat, double> reconstruct_metric_values(const Mat& G, const Mat& a_lower) {
    detail::checked_det(G, "metric");
    Mat ginv = G.inverse();
    Mat raised = ginv * a_lower * ginv;
    double det_raised = raised.determinant();
    if (std::abs(det_raised) < degeneracy_floor(raised))
        throw Error(ErrorCode::reconstruction_singular,
                    "raised a-matrix is singular; the linear-system solution is degenerate");
    Mat ghat = raised.inverse();
    double psi = 0.5 * std::log(std::abs(ghat.determinant() / G.determinant()));
    Mat gbar = std::exp(2.0 * psi) * ghat;
    return {gbar, psi};
}

inline std::pair<Mat, double> reconstruct_metric(const MetricField& g, const SymExprField& a_lower,
                                                 const Vec& point) {
    if (a_lower.dimension() != g.dimension())
        throw Error(ErrorCode::dimension_mismatch, "a-field/metric dimension mismatch");
    return reconstruct_metric_values(g.value_at(point), a_lower.value_at(point));
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

// Decision order: geodesy first (LC2 residual), then homothety, then
// affinity; homothety implies affinity so the stronger label wins.
inline MappingClass classify_mapping(const MetricField& g, const MetricField& gbar,
                                     const GridSpec& grid, MappingTolerances tol = {}) {
    if (grid.size() == 0) throw Error(ErrorCode::bad_job, "classification requires a nonempty grid");
    detail::PairScan scan = detail::scan_pair(g, gbar, grid);

    MappingClass out;
    out.tolerances = tol;
    out.lc2_max = scan.lc2.max;
    out.psi_gnorm_max = scan.psi_gnorm_max;
    out.signature_mismatch = scan.lc2.signature_mismatch;

    double c_min = scan.ratio[0], c_max = scan.ratio[0];
    for (double c : scan.ratio) {
        c_min = std::min(c_min, c);
        c_max = std::max(c_max, c);
    }
    double c_mean = pairwise_mean(scan.ratio);
    double scale = std::max(std::abs(c_mean), 1e-300);
    out.homothety_constant = c_mean;
    out.homothety_spread = (c_max - c_min) / scale;
    out.homothety_deviation = scan.deviation_max / scale;

    if (out.lc2_max > tol.lc) {
        out.label = MappingClassLabel::not_geodesic;
    } else if (out.homothety_spread <= tol.homothety && out.homothety_deviation <= tol.homothety) {
        out.label = MappingClassLabel::homothetic;
    } else if (out.psi_gnorm_max < tol.psi) {
        out.label = MappingClassLabel::affine;
    } else {
        out.label = MappingClassLabel::nontrivial_geodesic;
    }
    return out;
}

}  // namespace geomap
