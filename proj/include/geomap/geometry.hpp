#pragma once

// Charts, expression-backed metric fields, and pointwise tensor calculus:
// inverse metric, Christoffel symbols, Riemann/Ricci/scalar curvature and
// covariant derivatives of symmetric (0,2)/(2,0) tensor fields.
//
// Index conventions, fixed throughout:
//   Gamma^h_ij = 1/2 g^{hk} (d_i g_jk + d_j g_ik - d_k g_ij)
//   R^h_ijk    = d_j Gamma^h_ik - d_k Gamma^h_ij
//                + Gamma^h_ja Gamma^a_ik - Gamma^h_ka Gamma^a_ij
//   Ric_ij     = R^a_iaj,   R = g^{ij} Ric_ij
// With these signs the unit 2-sphere has scalar curvature +2.

#include "geomap/common.hpp"
#include "geomap/expr.hpp"

#include <optional>
#include <utility>

namespace geomap {

// Degeneracy floor: |det g| must exceed this at every evaluated point.
inline double degeneracy_floor(const Mat& g) {
    double max_row = 0;
    for (int i = 0; i < g.rows(); ++i) max_row = std::max(max_row, g.row(i).norm());
    return 1e-12 * int_pow(max_row, static_cast<int>(g.rows()));
}

// ---------------------------------------------------------------------------
// ChartDomain: per-coordinate open intervals, possibly infinite.
// ---------------------------------------------------------------------------

struct ChartDomain {
    int dimension = 0;
    std::vector<std::pair<double, double>> bounds;  // (lo, hi), open

    static ChartDomain unbounded(int n) {
        ChartDomain d;
        d.dimension = n;
        d.bounds.assign(n, {-kInf, kInf});
        return d;
    }

    static ChartDomain box(std::vector<std::pair<double, double>> b) {
        ChartDomain d;
        d.dimension = static_cast<int>(b.size());
        d.bounds = std::move(b);
        for (auto& [lo, hi] : d.bounds)
            if (!(lo < hi)) throw Error(ErrorCode::bad_job, "chart bounds must satisfy lo < hi");
        return d;
    }

    bool contains(const Vec& x) const {
        if (static_cast<int>(x.size()) != dimension) return false;
        for (int k = 0; k < dimension; ++k)
            if (!(x[k] > bounds[k].first && x[k] < bounds[k].second)) return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// Signature: a multiset of +/-1, compared by the count of minus signs.
// ---------------------------------------------------------------------------

class Signature {
public:
    Signature() = default;
    explicit Signature(std::vector<int> signs) : signs_(std::move(signs)) {
        for (int s : signs_)
            if (s != 1 && s != -1) throw Error(ErrorCode::bad_job, "signature entries must be +1 or -1");
    }

    static Signature riemannian(int n) { return Signature(std::vector<int>(n, 1)); }

    static Signature from_string(const std::string& s) {
        std::vector<int> v;
        for (char c : s) {
            if (c == '+') v.push_back(1);
            else if (c == '-') v.push_back(-1);
            else throw Error(ErrorCode::bad_job, "signature string must contain only '+'/'-'");
        }
        return Signature(std::move(v));
    }

    int dimension() const { return static_cast<int>(signs_.size()); }
    int negatives() const { return static_cast<int>(std::count(signs_.begin(), signs_.end(), -1)); }
    const std::vector<int>& signs() const { return signs_; }

    bool matches_count(int n_negative) const { return n_negative == negatives(); }

    std::string to_string() const {
        std::string s;
        for (int v : signs_) s += (v > 0 ? '+' : '-');
        return s;
    }

private:
    std::vector<int> signs_;
};

// ---------------------------------------------------------------------------
// GridSpec: uniform sample lattice, endpoints inclusive, lexicographic order
// with x1 slowest. Resolution 0 on any axis gives an empty grid.
// ---------------------------------------------------------------------------

struct GridSpec {
    std::vector<double> lo, hi;
    std::vector<int> res;

    int dimension() const { return static_cast<int>(lo.size()); }

    size_t size() const {
        size_t s = 1;
        for (int r : res) {
            if (r <= 0) return 0;
            s *= static_cast<size_t>(r);
        }
        return lo.empty() ? 0 : s;
    }

    Vec point(size_t flat) const {
        int n = dimension();
        Vec x(n);
        for (int k = n - 1; k >= 0; --k) {
            size_t r = static_cast<size_t>(res[k]);
            size_t i = flat % r;
            flat /= r;
            x[k] = res[k] == 1 ? 0.5 * (lo[k] + hi[k])
                               : lo[k] + (hi[k] - lo[k]) * static_cast<double>(i) / (res[k] - 1);
        }
        return x;
    }

    static GridSpec from_box(const std::vector<std::pair<double, double>>& box, int resolution = 9) {
        GridSpec g;
        for (auto& [a, b] : box) {
            g.lo.push_back(a);
            g.hi.push_back(b);
            g.res.push_back(resolution);
        }
        return g;
    }

    // Uniform lattice over a finite chart, shrunk 5% from each boundary.
    static GridSpec from_domain(const ChartDomain& d, int resolution = 9) {
        GridSpec g;
        for (auto& [a, b] : d.bounds) {
            if (!std::isfinite(a) || !std::isfinite(b))
                throw Error(ErrorCode::bad_job,
                            "grid over an unbounded chart requires explicit bounds");
            double margin = 0.05 * (b - a);
            g.lo.push_back(a + margin);
            g.hi.push_back(b - margin);
            g.res.push_back(resolution);
        }
        return g;
    }

    GridSpec with_resolution(int resolution) const {
        GridSpec g = *this;
        for (auto& r : g.res) r = resolution;
        return g;
    }

    // Deterministic stride subsample keeping at most max_points points.
    std::vector<size_t> sample_indices(size_t max_points) const {
        size_t total = size();
        std::vector<size_t> idx;
        if (total == 0) return idx;
        size_t stride = (total + max_points - 1) / max_points;
        for (size_t i = 0; i < total; i += stride) idx.push_back(i);
        return idx;
    }
};

// ---------------------------------------------------------------------------
// Symmetric expression-backed tensor field: n(n+1)/2 component expressions,
// upper triangle. Used for metric components and for (0,2)/(2,0) fields fed
// to covariant derivatives; grid-sampled data cannot be represented here, so
// every derivative taken from such a field is an exact jet.
// ---------------------------------------------------------------------------

struct SymTensorJets {
    int n = 0;
    Mat value;               // T_ij
    std::vector<Mat> d1;     // d1[k](i,j) = d_k T_ij
    std::vector<Mat> d2;     // packed (k<=l): d2[sym_index(k,l)](i,j)
    bool abs_kink = false;

    const Mat& second(int k, int l) const { return d2[sym_index(k, l, n)]; }
};

class SymExprField {
public:
    SymExprField() = default;

    SymExprField(int dimension, std::vector<ExprAST> packed_upper)
        : n_(dimension), comps_(std::move(packed_upper)) {
        if (static_cast<int>(comps_.size()) != sym_size(n_))
            throw Error(ErrorCode::dimension_mismatch, "expected n(n+1)/2 components");
        for (const auto& c : comps_)
            if (c.dimension() != n_)
                throw Error(ErrorCode::dimension_mismatch, "component dimension mismatch");
    }

    // Upper-triangle strings in row-major order: (1,1),(1,2),...,(n,n).
    static SymExprField parse(int dimension, const std::vector<std::string>& upper) {
        std::vector<ExprAST> comps;
        comps.reserve(upper.size());
        for (const auto& s : upper) comps.push_back(parse_expr(s, dimension));
        return SymExprField(dimension, std::move(comps));
    }

    int dimension() const { return n_; }
    const ExprAST& component(int i, int j) const { return comps_[sym_index(i, j, n_)]; }
    const std::vector<ExprAST>& components() const { return comps_; }

    Mat value_at(const Vec& x) const {
        Mat m(n_, n_);
        for (int i = 0; i < n_; ++i)
            for (int j = i; j < n_; ++j) m(i, j) = m(j, i) = eval_value(component(i, j), x);
        return m;
    }

    SymTensorJets jets_at(const Vec& x, bool with_second = true) const {
        SymTensorJets out;
        out.n = n_;
        out.value = Mat(n_, n_);
        out.d1.assign(n_, Mat(n_, n_));
        if (with_second) out.d2.assign(sym_size(n_), Mat(n_, n_));
        for (int i = 0; i < n_; ++i)
            for (int j = i; j < n_; ++j) {
                JetValue jv = eval_jet(component(i, j), x);
                out.abs_kink = out.abs_kink || jv.abs_kink;
                out.value(i, j) = out.value(j, i) = jv.value;
                for (int k = 0; k < n_; ++k) out.d1[k](i, j) = out.d1[k](j, i) = jv.grad[k];
                if (with_second) {
                    int idx = 0;
                    for (int k = 0; k < n_; ++k)
                        for (int l = k; l < n_; ++l, ++idx)
                            out.d2[idx](i, j) = out.d2[idx](j, i) = jv.hess[idx];
                }
            }
        return out;
    }

private:
    int n_ = 0;
    std::vector<ExprAST> comps_;
};

// A vector of component expressions (e.g. a lambda one-form field).
class VecExprField {
public:
    VecExprField() = default;
    VecExprField(int dimension, std::vector<ExprAST> comps) : n_(dimension), comps_(std::move(comps)) {
        if (static_cast<int>(comps_.size()) != n_)
            throw Error(ErrorCode::dimension_mismatch, "expected n components");
    }

    static VecExprField zero(int dimension) {
        std::vector<ExprAST> comps;
        for (int i = 0; i < dimension; ++i) comps.push_back(ExprAST(ast::number(0.0), dimension));
        return VecExprField(dimension, std::move(comps));
    }

    static VecExprField parse(int dimension, const std::vector<std::string>& entries) {
        std::vector<ExprAST> comps;
        for (const auto& s : entries) comps.push_back(parse_expr(s, dimension));
        return VecExprField(dimension, std::move(comps));
    }

    int dimension() const { return n_; }
    const ExprAST& component(int i) const { return comps_[i]; }

    Vec value_at(const Vec& x) const {
        Vec v(n_);
        for (int i = 0; i < n_; ++i) v[i] = eval_value(comps_[i], x);
        return v;
    }

private:
    int n_ = 0;
    std::vector<ExprAST> comps_;
};

// ---------------------------------------------------------------------------
// MetricField
// ---------------------------------------------------------------------------

class MetricField {
public:
    MetricField() = default;

    MetricField(ChartDomain domain, SymExprField components, Signature signature,
                std::string smoothness_label = "C^omega",
                std::optional<std::vector<std::pair<double, double>>> default_box = std::nullopt)
        : domain_(std::move(domain)),
          components_(std::move(components)),
          signature_(std::move(signature)),
          smoothness_label_(std::move(smoothness_label)),
          default_box_(std::move(default_box)) {
        if (domain_.dimension < 2)
            throw Error(ErrorCode::dimension_mismatch, "metric dimension must be >= 2");
        if (components_.dimension() != domain_.dimension || signature_.dimension() != domain_.dimension)
            throw Error(ErrorCode::dimension_mismatch, "metric component/signature dimension mismatch");
    }

    int dimension() const { return domain_.dimension; }
    const ChartDomain& domain() const { return domain_; }
    const SymExprField& components() const { return components_; }
    const Signature& signature() const { return signature_; }
    const std::string& smoothness_label() const { return smoothness_label_; }
    const std::optional<std::vector<std::pair<double, double>>>& default_box() const {
        return default_box_;
    }

    void require_in_domain(const Vec& x) const {
        if (!domain_.contains(x)) {
            std::string coords = "(";
            for (int k = 0; k < x.size(); ++k)
                coords += (k ? "," : "") + detail::format_double(x[k]);
            throw Error(ErrorCode::expr_domain, "point " + coords + ") outside chart domain");
        }
    }

    Mat value_at(const Vec& x) const {
        require_in_domain(x);
        return components_.value_at(x);
    }

    SymTensorJets jets_at(const Vec& x, bool with_second = true) const {
        require_in_domain(x);
        return components_.jets_at(x, with_second);
    }

    // Default sample grid: explicit box if the family provides one, otherwise
    // the 5%-shrunk chart. Resolution is per axis.
    GridSpec default_grid(int resolution = 9) const {
        if (default_box_) return GridSpec::from_box(*default_box_, resolution);
        return GridSpec::from_domain(domain_, resolution);
    }

private:
    ChartDomain domain_;
    SymExprField components_;
    Signature signature_;
    std::string smoothness_label_;
    std::optional<std::vector<std::pair<double, double>>> default_box_;
};

// ---------------------------------------------------------------------------
// Pointwise operations
// ---------------------------------------------------------------------------

namespace detail {

inline Mat checked_inverse(const Mat& g, const char* what) {
    double det = g.determinant();
    if (std::abs(det) < degeneracy_floor(g))
        throw Error(ErrorCode::degenerate_metric,
                    std::string(what) + ": |det| = " + format_double(std::abs(det)) +
                        " below degeneracy floor");
    return g.inverse();
}

}  // namespace detail

inline Mat inverse_metric(const MetricField& g, const Vec& point) {
    return detail::checked_inverse(g.value_at(point), "metric");
}

struct ConnectionCoefficients {
    int n = 0;
    Vec point;
    std::vector<double> gamma;  // full h,i,j storage; symmetric in (i,j) by construction

    double operator()(int h, int i, int j) const { return gamma[(h * n + i) * n + j]; }
    double& at(int h, int i, int j) { return gamma[(h * n + i) * n + j]; }
};

// Christoffel symbols plus their first coordinate derivatives; the latter are
// what curvature assembly needs and come from the metric component Hessians.
struct ConnectionWithDerivative {
    ConnectionCoefficients gamma;
    std::vector<double> dgamma;  // d_m Gamma^h_ij at (((m*n)+h)*n+i)*n+j

    int n() const { return gamma.n; }
    double d(int m, int h, int i, int j) const {
        return dgamma[(((m * n()) + h) * n() + i) * n() + j];
    }
};

namespace detail {

inline ConnectionCoefficients christoffel_from_jets(const SymTensorJets& J, const Mat& ginv,
                                                    const Vec& point) {
    int n = J.n;
    ConnectionCoefficients c;
    c.n = n;
    c.point = point;
    c.gamma.assign(static_cast<size_t>(n) * n * n, 0.0);
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double s = 0;
                for (int k = 0; k < n; ++k)
                    s += ginv(h, k) * (J.d1[i](j, k) + J.d1[j](i, k) - J.d1[k](i, j));
                s *= 0.5;
                c.at(h, i, j) = s;
                c.at(h, j, i) = s;
            }
    return c;
}

inline ConnectionWithDerivative christoffel_with_derivative_from_jets(const SymTensorJets& J,
                                                                      const Mat& ginv,
                                                                      const Vec& point) {
    int n = J.n;
    ConnectionWithDerivative out;
    out.gamma = christoffel_from_jets(J, ginv, point);
    out.dgamma.assign(static_cast<size_t>(n) * n * n * n, 0.0);

    // d_m g^{hk} = -(ginv * d_m g * ginv)^{hk}
    std::vector<Mat> dginv(n);
    for (int m = 0; m < n; ++m) dginv[m] = -(ginv * J.d1[m] * ginv);

    for (int m = 0; m < n; ++m)
        for (int h = 0; h < n; ++h)
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    double s = 0;
                    for (int k = 0; k < n; ++k) {
                        double bracket = J.d1[i](j, k) + J.d1[j](i, k) - J.d1[k](i, j);
                        double dbracket = J.second(m, i)(j, k) + J.second(m, j)(i, k) -
                                          J.second(m, k)(i, j);
                        s += dginv[m](h, k) * bracket + ginv(h, k) * dbracket;
                    }
                    s *= 0.5;
                    out.dgamma[(((m * n) + h) * n + i) * n + j] = s;
                    out.dgamma[(((m * n) + h) * n + j) * n + i] = s;
                }
    return out;
}

}  // namespace detail

inline ConnectionCoefficients christoffel(const MetricField& g, const Vec& point) {
    SymTensorJets J = g.jets_at(point, /*with_second=*/false);
    Mat ginv = detail::checked_inverse(J.value, "metric");
    return detail::christoffel_from_jets(J, ginv, point);
}

inline ConnectionWithDerivative christoffel_with_derivative(const MetricField& g, const Vec& point) {
    SymTensorJets J = g.jets_at(point, /*with_second=*/true);
    Mat ginv = detail::checked_inverse(J.value, "metric");
    return detail::christoffel_with_derivative_from_jets(J, ginv, point);
}

struct CurvatureAtPoint {
    int n = 0;
    std::vector<double> riemann;  // R^h_ijk, full storage
    Mat ricci;
    double scalar = 0;

    double riem(int h, int i, int j, int k) const {
        return riemann[(((h * n) + i) * n + j) * n + k];
    }
};

inline CurvatureAtPoint curvature(const MetricField& g, const Vec& point) {
    SymTensorJets J = g.jets_at(point, /*with_second=*/true);
    Mat ginv = detail::checked_inverse(J.value, "metric");
    ConnectionWithDerivative cd = detail::christoffel_with_derivative_from_jets(J, ginv, point);
    const ConnectionCoefficients& G = cd.gamma;
    int n = J.n;

    CurvatureAtPoint out;
    out.n = n;
    out.riemann.assign(static_cast<size_t>(n) * n * n * n, 0.0);
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    double term1 = cd.d(j, h, i, k) + [&] {
                        double q = 0;
                        for (int a = 0; a < n; ++a) q += G(h, j, a) * G(a, i, k);
                        return q;
                    }();
                    double term2 = cd.d(k, h, i, j) + [&] {
                        double q = 0;
                        for (int a = 0; a < n; ++a) q += G(h, k, a) * G(a, i, j);
                        return q;
                    }();
                    out.riemann[(((h * n) + i) * n + j) * n + k] = term1 - term2;
                }

    out.ricci = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0;
            for (int a = 0; a < n; ++a) s += out.riem(a, i, a, j);
            out.ricci(i, j) = s;
        }
    out.scalar = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.scalar += ginv(i, j) * out.ricci(i, j);
    return out;
}

// nabla_k t_ij = d_k t_ij - Gamma^a_ki t_aj - Gamma^a_kj t_ia
inline std::vector<Mat> covariant_derivative_02(const SymExprField& field, const MetricField& g,
                                                const Vec& point) {
    if (field.dimension() != g.dimension())
        throw Error(ErrorCode::dimension_mismatch, "field/metric dimension mismatch");
    SymTensorJets T = field.jets_at(point, /*with_second=*/false);
    ConnectionCoefficients G = christoffel(g, point);
    int n = T.n;
    std::vector<Mat> out(n, Mat::Zero(n, n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = T.d1[k](i, j);
                for (int a = 0; a < n; ++a)
                    s -= G(a, k, i) * T.value(a, j) + G(a, k, j) * T.value(i, a);
                out[k](i, j) = s;
            }
    return out;
}

// nabla_k t^{ij} = d_k t^{ij} + Gamma^i_ka t^{aj} + Gamma^j_ka t^{ia}
inline std::vector<Mat> covariant_derivative_20(const SymExprField& field, const MetricField& g,
                                                const Vec& point) {
    if (field.dimension() != g.dimension())
        throw Error(ErrorCode::dimension_mismatch, "field/metric dimension mismatch");
    SymTensorJets T = field.jets_at(point, /*with_second=*/false);
    ConnectionCoefficients G = christoffel(g, point);
    int n = T.n;
    std::vector<Mat> out(n, Mat::Zero(n, n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = T.d1[k](i, j);
                for (int a = 0; a < n; ++a)
                    s += G(i, k, a) * T.value(a, j) + G(j, k, a) * T.value(i, a);
                out[k](i, j) = s;
            }
    return out;
}

// Count of negative eigenvalues, used for signature validation.
inline int negative_eigenvalue_count(const Mat& g) {
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    int neg = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i] < 0) ++neg;
    return neg;
}

// Checks nondegeneracy and the declared eigenvalue sign pattern at every grid
// point; throws on the first violation.
inline void validate_metric_on_grid(const MetricField& g, const GridSpec& grid) {
    for (size_t i = 0; i < grid.size(); ++i) {
        Vec x = grid.point(i);
        Mat G = g.value_at(x);
        detail::checked_inverse(G, "metric");
        if (!g.signature().matches_count(negative_eigenvalue_count(G)))
            throw Error(ErrorCode::signature_mismatch,
                        "eigenvalue sign pattern differs from declared signature " +
                            g.signature().to_string());
    }
}

}  // namespace geomap
