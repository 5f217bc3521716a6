#pragma once

// Pearson matrices, OLS for the five model families, Bonferroni correction
// and the derived analyses (elasticity, quadratic vertex, marginal effects).

#include <teamprod/error.hpp>
#include <teamprod/util/csv.hpp>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace teamprod::stats {

/// Named numeric columns of equal length.
class Frame {
public:
    void add(const std::string& name, std::vector<double> values) {
        if (!cols_.empty() && values.size() != rows())
            throw Error(ErrorKind::invalid_argument, "column '" + name + "' has a different length");
        if (!cols_.count(name)) order_.push_back(name);
        cols_[name] = std::move(values);
    }

    const std::vector<double>& col(const std::string& name) const {
        auto it = cols_.find(name);
        if (it == cols_.end()) throw Error(ErrorKind::invalid_argument, "frame has no column '" + name + "'");
        return it->second;
    }

    bool has(const std::string& name) const { return cols_.count(name) != 0; }
    std::size_t rows() const { return cols_.empty() ? 0 : cols_.begin()->second.size(); }
    const std::vector<std::string>& names() const { return order_; }

private:
    std::map<std::string, std::vector<double>> cols_;
    std::vector<std::string> order_;
};

// --- correlation -------------------------------------------------------------------

/// Sample Pearson r; NaN when either side has zero variance.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct CorrelationMatrix {
    std::vector<std::string> features;
    std::vector<std::vector<double>> r;  // NaN marks a missing cell
};

/// Features are read as-is; apply transforms to the frame beforehand.
inline CorrelationMatrix pearson_matrix(const Frame& frame, const std::vector<std::string>& features) {
    if (frame.rows() < 3) throw Error(ErrorKind::insufficient_observations, "correlation needs at least 3 observations");
    CorrelationMatrix m;
    m.features = features;
    const auto k = features.size();
    m.r.assign(k, std::vector<double>(k, 1.0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) m.r[i][j] = m.r[j][i] = pearson(frame.col(features[i]), frame.col(features[j]));
    return m;
}

inline std::string write_correlation_csv(const CorrelationMatrix& m) {
    std::ostringstream os;
    std::vector<std::string> header{"feature"};
    header.insert(header.end(), m.features.begin(), m.features.end());
    csv::write_row(os, header);
    for (std::size_t i = 0; i < m.features.size(); ++i) {
        std::vector<std::string> row{m.features[i]};
        for (double v : m.r[i]) row.push_back(csv::format_number(v));
        csv::write_row(os, row);
    }
    return os.str();
}

/// Plot data for external heat-map rendering; missing cells are null.
inline std::string write_correlation_plot_data(const CorrelationMatrix& m) {
    nlohmann::ordered_json j;
    j["features"] = m.features;
    auto values = nlohmann::ordered_json::array();
    for (const auto& row : m.r) {
        auto jr = nlohmann::ordered_json::array();
        for (double v : row) jr.push_back(std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v));
        values.push_back(std::move(jr));
    }
    j["values"] = std::move(values);
    return j.dump(2) + "\n";
}

// --- model specification ---------------------------------------------------------

enum class Term { intercept, ts, ts2, ind, fmodr, ts_x_ind };

inline std::string_view to_string(Term t) {
    switch (t) {
        case Term::intercept: return "IC";
        case Term::ts: return "TS";
        case Term::ts2: return "TS2";
        case Term::ind: return "InD";
        case Term::fmodr: return "FModR";
        case Term::ts_x_ind: return "TSxInD";
    }
    return "?";
}

/// Which frame columns hold the (already transformed) regressors.
struct ColumnMap {
    std::string ts = "team_size";
    std::string ind = "ind";
    std::string fmodr = "fmodr";
};

struct ModelSpec {
    std::string target;
    char family = 'a';
    std::vector<Term> terms;
    ColumnMap columns;

    static std::vector<Term> family_terms(char family) {
        using T = Term;
        switch (family) {
            case 'a': return {T::intercept, T::ts};
            case 'b': return {T::intercept, T::ts, T::ts2};
            case 'c': return {T::intercept, T::ts, T::ind, T::fmodr};
            case 'd': return {T::intercept, T::ts, T::ts2, T::ind, T::fmodr};
            case 'e': return {T::intercept, T::ts, T::ind, T::ts_x_ind, T::fmodr};
        }
        throw Error(ErrorKind::invalid_argument, std::string("unknown model family '") + family + "'");
    }

    static ModelSpec of(char family, std::string target, ColumnMap columns = {}) {
        return ModelSpec{std::move(target), family, family_terms(family), std::move(columns)};
    }

    std::size_t tests() const { return terms.size() - 1; }
};

inline std::vector<double> design_column(Term t, const Frame& f, const ColumnMap& c) {
    const auto n = f.rows();
    std::vector<double> out(n);
    switch (t) {
        case Term::intercept: std::fill(out.begin(), out.end(), 1.0); break;
        case Term::ts: out = f.col(c.ts); break;
        case Term::ts2:
            for (std::size_t i = 0; i < n; ++i) out[i] = f.col(c.ts)[i] * f.col(c.ts)[i];
            break;
        case Term::ind: out = f.col(c.ind); break;
        case Term::fmodr: out = f.col(c.fmodr); break;
        case Term::ts_x_ind:
            for (std::size_t i = 0; i < n; ++i) out[i] = f.col(c.ts)[i] * f.col(c.ind)[i];
            break;
    }
    return out;
}

// --- fitting ----------------------------------------------------------------------------

struct TermResult {
    Term term = Term::intercept;
    double beta = 0, se = 0, t = 0, p = 1, p_adj = 1;
    std::string stars;
    double mean = 0;  // sample mean of the design column
};

struct RegressionResult {
    ModelSpec spec;
    std::vector<TermResult> terms;
    double r2 = 0, adj_r2 = 0;
    std::size_t n = 0;
    std::size_t df = 0;
    std::vector<double> fitted, residuals;

    const TermResult& term(Term t) const {
        for (const auto& r : terms)
            if (r.term == t) return r;
        throw Error(ErrorKind::wrong_model_family,
                    std::string("model family '") + spec.family + "' has no term " + std::string(to_string(t)));
    }
    bool has(Term t) const {
        return std::any_of(terms.begin(), terms.end(), [&](const TermResult& r) { return r.term == t; });
    }
};

/// Two-sided Student-t p-value with `df` degrees of freedom.
inline double two_sided_p(double t, double df) {
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    return boost::math::ibeta(df / 2.0, 0.5, df / (df + t * t));
}

inline std::string significance_stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

/// min(1, m * p) per entry.
inline std::vector<double> bonferroni(const std::vector<double>& p, long long m) {
    if (m < 1) throw Error(ErrorKind::invalid_argument, "Bonferroni m must be at least 1");
    std::vector<double> out;
    out.reserve(p.size());
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::invalid_argument, "p-value outside [0, 1]");
        out.push_back(std::min(1.0, static_cast<double>(m) * v));
    }
    return out;
}

inline void apply_bonferroni(RegressionResult& r, long long m) {
    std::vector<double> p;
    for (const auto& t : r.terms) p.push_back(t.p);
    auto adj = bonferroni(p, m);
    for (std::size_t i = 0; i < r.terms.size(); ++i) {
        r.terms[i].p_adj = adj[i];
        r.terms[i].stars = significance_stars(adj[i]);
    }
}

/// Least squares via column-pivoted Householder QR; rank threshold 1e-10
/// relative. Standard errors use the unbiased residual variance.
inline RegressionResult ols_fit(const ModelSpec& spec, const Frame& data, long long bonferroni_m = 1) {
    const auto n = data.rows();
    const auto k = spec.terms.size();
    if (k == 0 || spec.terms.front() != Term::intercept)
        throw Error(ErrorKind::invalid_argument, "model terms must start with the intercept");
    if (n <= k)
        throw Error(ErrorKind::insufficient_observations,
                    "need more than " + std::to_string(k) + " observations, have " + std::to_string(n));
    const auto N = static_cast<Eigen::Index>(n), K = static_cast<Eigen::Index>(k);
    Eigen::MatrixXd x(N, K);
    std::vector<double> means(k);
    for (std::size_t j = 0; j < k; ++j) {
        auto col = design_column(spec.terms[j], data, spec.columns);
        double sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(col[i]))
                throw Error(ErrorKind::invalid_argument, "non-finite regressor value in " + std::string(to_string(spec.terms[j])));
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
            sum += col[i];
        }
        means[j] = sum / static_cast<double>(n);
    }
    const auto& target = data.col(spec.target);
    Eigen::VectorXd y(N);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(target[i])) throw Error(ErrorKind::invalid_argument, "non-finite target value");
        y(static_cast<Eigen::Index>(i)) = target[i];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < K) throw Error(ErrorKind::rank_deficient, "design matrix is rank deficient for target " + spec.target);
    Eigen::VectorXd beta = qr.solve(y);
    Eigen::VectorXd fitted = x * beta;
    Eigen::VectorXd resid = y - fitted;

    Eigen::MatrixXd r = qr.matrixR().topLeftCorner(K, K).template triangularView<Eigen::Upper>();
    Eigen::MatrixXd rinv = r.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(K, K));
    Eigen::MatrixXd inv_perm = rinv * rinv.transpose();
    Eigen::MatrixXd xtx_inv = qr.colsPermutation() * inv_perm * qr.colsPermutation().transpose();

    RegressionResult out;
    out.spec = spec;
    out.n = n;
    out.df = n - k;
    const double df = static_cast<double>(out.df);
    const double sse = resid.squaredNorm();
    const double sigma2 = sse / df;
    const double ybar = y.mean();
    const double sst = (y.array() - ybar).square().sum();
    out.r2 = sst > 0.0 ? std::max(0.0, 1.0 - sse / sst) : 0.0;
    out.adj_r2 = 1.0 - (1.0 - out.r2) * (static_cast<double>(n) - 1.0) / df;
    for (std::size_t j = 0; j < k; ++j) {
        TermResult t;
        t.term = spec.terms[j];
        const auto J = static_cast<Eigen::Index>(j);
        t.beta = beta(J);
        t.se = std::sqrt(std::max(0.0, sigma2 * xtx_inv(J, J)));
        if (t.se > 0.0)
            t.t = t.beta / t.se;
        else
            t.t = t.beta == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), t.beta);
        t.p = two_sided_p(t.t, df);
        t.mean = means[j];
        out.terms.push_back(t);
    }
    out.fitted.assign(fitted.data(), fitted.data() + N);
    out.residuals.assign(resid.data(), resid.data() + N);
    apply_bonferroni(out, bonferroni_m);
    return out;
}

/// Fits every (target, family) pair. With m = 0 the Bonferroni factor for a
/// family is (#targets) x (#non-intercept terms).
inline std::vector<RegressionResult> fit_battery(const Frame& data, const std::vector<std::string>& targets,
                                                 const std::string& families, long long m = 0,
                                                 const ColumnMap& columns = {}) {
    std::vector<RegressionResult> out;
    for (char f : families) {
        auto terms = ModelSpec::family_terms(f);
        long long mf = m > 0 ? m : static_cast<long long>(targets.size() * (terms.size() - 1));
        for (const auto& target : targets) out.push_back(ols_fit(ModelSpec::of(f, target, columns), data, std::max(1LL, mf)));
    }
    return out;
}

// --- derived analyses -------------------------------------------------------------

/// Relative productivity loss per doubling of team size in a log-log model.
inline double elasticity_per_doubling(double beta) { return 1.0 - std::pow(2.0, beta); }

/// Team size at the maximum of the parabola in log TS; none when convex.
inline std::optional<double> quadratic_vertex(double beta_ts, double beta_ts2) {
    if (!(beta_ts2 < 0.0)) return std::nullopt;
    return std::exp(-beta_ts / (2.0 * beta_ts2));
}

struct MarginalLine {
    double level = 0;  // log InD
    double intercept = 0;
    double slope = 0;
};

/// Lines in (log TS, target) space for each log-InD level; FModR is held at
/// its sample mean and folded into the intercept.
inline std::vector<MarginalLine> marginal_effects(const RegressionResult& r, const std::vector<double>& levels) {
    if (r.spec.family != 'e' || !r.has(Term::ts_x_ind))
        throw Error(ErrorKind::wrong_model_family, "marginal effects need a family-e fit");
    const auto& ic = r.term(Term::intercept);
    const auto& ts = r.term(Term::ts);
    const auto& ind = r.term(Term::ind);
    const auto& tx = r.term(Term::ts_x_ind);
    double fold = r.has(Term::fmodr) ? r.term(Term::fmodr).beta * r.term(Term::fmodr).mean : 0.0;
    std::vector<MarginalLine> out;
    for (double v : levels) out.push_back({v, ic.beta + ind.beta * v + fold, ts.beta + tx.beta * v});
    return out;
}

// --- reporting --------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const RegressionResult& r) {
    nlohmann::ordered_json j;
    j["target"] = r.spec.target;
    j["family"] = std::string(1, r.spec.family);
    j["n"] = r.n;
    j["r2"] = r.r2;
    j["adj_r2"] = r.adj_r2;
    auto terms = nlohmann::ordered_json::array();
    for (const auto& t : r.terms) {
        nlohmann::ordered_json jt;
        jt["term"] = std::string(to_string(t.term));
        jt["beta"] = t.beta;
        jt["se"] = t.se;
        jt["t"] = std::isfinite(t.t) ? nlohmann::ordered_json(t.t) : nlohmann::ordered_json(nullptr);
        jt["p"] = t.p;
        jt["p_adj"] = t.p_adj;
        jt["stars"] = t.stars;
        jt["mean"] = t.mean;
        terms.push_back(std::move(jt));
    }
    j["terms"] = std::move(terms);
    return j;
}

inline Term parse_term(std::string_view s) {
    for (auto t : {Term::intercept, Term::ts, Term::ts2, Term::ind, Term::fmodr, Term::ts_x_ind})
        if (to_string(t) == s) return t;
    throw Error(ErrorKind::malformed_input, "unknown model term '" + std::string(s) + "'");
}

/// Inverse of to_json; fitted values and residuals are not part of the report.
inline RegressionResult result_from_json(const nlohmann::json& j) {
    RegressionResult r;
    try {
        auto family = j.at("family").get<std::string>();
        if (family.size() != 1) throw Error(ErrorKind::malformed_input, "bad model family '" + family + "'");
        r.spec.target = j.at("target").get<std::string>();
        r.spec.family = family[0];
        r.n = j.at("n").get<std::size_t>();
        r.r2 = j.at("r2").get<double>();
        r.adj_r2 = j.at("adj_r2").get<double>();
        for (const auto& jt : j.at("terms")) {
            TermResult t;
            t.term = parse_term(jt.at("term").get<std::string>());
            t.beta = jt.at("beta").get<double>();
            t.se = jt.at("se").get<double>();
            t.t = jt.at("t").is_null() ? std::copysign(std::numeric_limits<double>::infinity(), t.beta)
                                       : jt.at("t").get<double>();
            t.p = jt.at("p").get<double>();
            t.p_adj = jt.at("p_adj").get<double>();
            t.stars = jt.at("stars").get<std::string>();
            t.mean = jt.at("mean").get<double>();
            r.spec.terms.push_back(t.term);
            r.terms.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::malformed_input, std::string("regression report: ") + e.what());
    }
    r.df = r.n - r.terms.size();
    return r;
}

inline std::string format_fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    auto s = os.str();
    if (s == "-0.00") s = "0.00";
    return s;
}

/// One block per family: rows are terms, columns targets; each cell shows the
/// coefficient with stars and the standard error in parentheses underneath.
inline std::string render_table(const std::vector<RegressionResult>& results) {
    std::map<char, std::vector<const RegressionResult*>> by_family;
    for (const auto& r : results) by_family[r.spec.family].push_back(&r);
    std::ostringstream os;
    const int w = 12;
    for (const auto& [family, rs] : by_family) {
        os << "(" << family << ")\n" << std::setw(8) << std::left << "" << std::right;
        for (const auto* r : rs) os << std::setw(w) << r->spec.target;
        os << "\n";
        for (std::size_t i = 0; i < rs.front()->terms.size(); ++i) {
            os << std::setw(8) << std::left << to_string(rs.front()->terms[i].term) << std::right;
            for (const auto* r : rs) os << std::setw(w) << format_fixed(r->terms[i].beta, 2) + r->terms[i].stars;
            os << "\n" << std::setw(8) << "";
            for (const auto* r : rs) os << std::setw(w) << "(" + format_fixed(r->terms[i].se, 2) + ")";
            os << "\n";
        }
        os << std::setw(8) << std::left << "R2" << std::right;
        for (const auto* r : rs) os << std::setw(w) << format_fixed(r->r2, 2);
        os << "\n" << std::setw(8) << std::left << "Adj. R2" << std::right;
        for (const auto* r : rs) os << std::setw(w) << format_fixed(r->adj_r2, 2);
        os << "\n" << std::setw(8) << std::left << "n" << std::right;
        for (const auto* r : rs) os << std::setw(w) << r->n;
        os << "\n\n";
    }
    os << "* p < 0.05, ** p < 0.01, *** p < 0.001 (Bonferroni-adjusted)\n";
    return os.str();
}

}  // namespace teamprod::stats
