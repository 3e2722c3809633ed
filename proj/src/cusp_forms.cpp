#include "bergman/cusp_forms.hpp"

#include "bergman/errors.hpp"
#include "bergman/summation.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace bergman {

namespace {

constexpr int kGaussNodes = 20;

struct Rule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

const Rule& gauss_rule() {
    static const Rule rule = [] {
        using G = boost::math::quadrature::gauss<double, kGaussNodes>;
        Rule r;
        const auto& x = G::abscissa();
        const auto& w = G::weights();
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.nodes.push_back(x[i]);
            r.weights.push_back(w[i]);
            if (x[i] != 0.0) {
                r.nodes.push_back(-x[i]);
                r.weights.push_back(w[i]);
            }
        }
        return r;
    }();
    return rule;
}

// Composite Gauss-Legendre nodes on [a, b] with `panels` equal panels.
template <typename F>
void for_each_node(double a, double b, int panels, F&& f) {
    const Rule& r = gauss_rule();
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) f(mid + 0.5 * h * r.nodes[i], 0.5 * h * r.weights[i]);
    }
}

cplx parse_scalar(const nlohmann::json& v) {
    if (v.is_string()) return {std::stod(v.get<std::string>()), 0.0};
    if (v.is_number()) return {v.get<double>(), 0.0};
    throw ConfigError("coefficient must be a decimal string or number");
}

cplx parse_coefficient(const nlohmann::json& v) {
    if (v.is_array()) {
        if (v.size() != 2) throw ConfigError("complex coefficient must be a two-element array");
        return {parse_scalar(v[0]).real(), parse_scalar(v[1]).real()};
    }
    return parse_scalar(v);
}

}  // namespace

QExpansionForm make_form(std::string label, int weight, std::vector<cplx> coefficients,
                         std::optional<double> growth_exponent) {
    if (weight < 2 || weight % 2 != 0) throw DomainError("weight must be an even integer >= 2");
    if (coefficients.empty()) throw DomainError("form " + label + " has no coefficients");
    for (const auto& a : coefficients)
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
            throw DomainError("form " + label + " has a non-finite coefficient");
    QExpansionForm f;
    f.label = std::move(label);
    f.weight = weight;
    f.coefficients = std::move(coefficients);
    f.growth_exponent = growth_exponent.value_or((weight - 1) / 2.0 + 0.01);
    return f;
}

QExpansionForm parse_form_json(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed form record: ") + e.what());
    }
    if (!j.contains("weight") || !j.contains("coefficients")) throw ConfigError("form record needs weight and coefficients");
    std::vector<cplx> coeffs;
    for (const auto& c : j["coefficients"]) coeffs.push_back(parse_coefficient(c));
    std::optional<double> growth;
    if (j.contains("growth_exponent")) growth = j["growth_exponent"].get<double>();
    return make_form(j.value("label", std::string("form")), j["weight"].get<int>(), std::move(coeffs), growth);
}

std::vector<QExpansionForm> read_forms_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open forms file " + path);
    std::vector<QExpansionForm> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse_form_json(line));
        } catch (const Error& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (out.empty()) throw ConfigError("forms file " + path + " holds no forms");
    return out;
}

cplx evaluate_q_expansion(const QExpansionForm& f, const UhpPoint& z) {
    return evaluate_q_derivative(f, z, 0);
}

cplx evaluate_q_derivative(const QExpansionForm& f, const UhpPoint& z, int order) {
    const cplx q = q_coordinate(z).q;
    const cplx step(0.0, 2.0 * kPi);
    // Horner in q on sum a_m (2 pi i m)^order q^{m-1}, times q
    cplx acc{};
    for (std::size_t i = f.coefficients.size(); i-- > 0;) {
        const double m = static_cast<double>(i + 1);
        acc = acc * q + f.coefficients[i] * std::pow(step * m, order);
    }
    return acc * q;
}

double truncation_bound(const QExpansionForm& f, const UhpPoint& z) {
    const double r = q_coordinate(z).modulus();
    const double alpha = f.growth_exponent;
    double c = 0.0;
    for (std::size_t i = 0; i < f.coefficients.size(); ++i)
        c = std::max(c, std::abs(f.coefficients[i]) / std::pow(static_cast<double>(i + 1), alpha));
    const double m1 = static_cast<double>(f.coefficients.size() + 1);
    const double rho = std::pow((m1 + 1.0) / m1, alpha) * r;
    if (rho >= 1.0) return INFINITY;
    return c * std::exp(alpha * std::log(m1) + m1 * std::log(r)) / (1.0 - rho);
}

CuspFactor evaluate_cusp_factor(const QExpansionForm& f, cplx q) {
    cplx g{}, dg{};
    for (std::size_t i = f.coefficients.size(); i-- > 0;) {
        dg = dg * q + g;
        g = g * q + f.coefficients[i];
    }
    return {g, dg};
}

double modularity_defect(const QExpansionForm& f, const MoebiusTransform& g, const UhpPoint& z) {
    const cplx factor = std::pow(g.c() * z.z() + g.d(), f.weight);
    const cplx lhs = evaluate_q_expansion(f, apply_moebius(g, z));
    const cplx rhs = factor * evaluate_q_expansion(f, z);
    return std::abs(lhs - rhs) / std::abs(rhs);
}

int CuspFormBasis::weight() const {
    if (forms.empty()) throw DomainError("empty basis has no weight");
    return forms.front().weight;
}

Eigen::VectorXcd CuspFormBasis::values(const UhpPoint& z, int derivative_order) const {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(forms.size()));
    for (std::size_t j = 0; j < forms.size(); ++j)
        v(static_cast<Eigen::Index>(j)) = evaluate_q_derivative(forms[j], z, derivative_order);
    return v;
}

CuspFormBasis make_basis(std::vector<QExpansionForm> forms) {
    for (const auto& f : forms)
        if (f.weight != forms.front().weight) throw DomainError("basis mixes weights");
    CuspFormBasis b;
    b.forms = std::move(forms);
    return b;
}

QuadratureDomain QuadratureDomain::modular() {
    QuadratureDomain d;
    d.strip = Strip{-0.5, [](double x) { return std::sqrt(1.0 - x * x); }, 1.0};
    return d;
}

QuadratureDomain QuadratureDomain::strip_above(double x0, double y0) {
    if (!(y0 > 0.0)) throw DomainError("strip must lie in the upper half-plane");
    QuadratureDomain d;
    d.strip = Strip{x0, [y0](double) { return y0; }, y0};
    return d;
}

double exponential_moment_tail(int s, double a, double from) {
    // Gamma(s, a Y) / a^s
    const double q = boost::math::gamma_q(static_cast<double>(s), a * from);
    if (q == 0.0) return 0.0;
    return std::exp(std::lgamma(static_cast<double>(s)) + std::log(q) - s * std::log(a));
}

namespace {

Eigen::MatrixXcd gram_once(const CuspFormBasis& basis, const QuadratureDomain& domain, double cutoff,
                           const QuadratureOptions& opts, int refine) {
    const auto n = static_cast<Eigen::Index>(basis.size());
    const int two_k = basis.weight();
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(n, n);
    auto accumulate = [&](double x, double y, double w) {
        const UhpPoint z(x, y);
        const Eigen::VectorXcd v = basis.values(z);
        g.noalias() += (w * std::pow(y, two_k - 2)) * (v * v.adjoint());
    };
    if (domain.strip) {
        const auto& s = *domain.strip;
        const double top = std::max(cutoff, s.lower_max);
        for_each_node(s.x0, s.x0 + 1.0, opts.x_panels * refine, [&](double x, double wx) {
            const double low = s.lower(x);
            const int panels = std::max(1, static_cast<int>(std::ceil((top - low) / opts.y_panel_width))) * refine;
            if (top > low) for_each_node(low, top, panels, [&](double y, double wy) { accumulate(x, y, wx * wy); });
        });
        // above `top` the x-integral over a period is exact: sum_m a_im conj(a_jm) e^{-4 pi m y}
        std::size_t m_max = 0;
        for (const auto& f : basis.forms) m_max = std::max(m_max, f.length());
        for (std::size_t m = 1; m <= m_max; ++m) {
            const double t = exponential_moment_tail(two_k - 1, 4.0 * kPi * static_cast<double>(m), top);
            if (t == 0.0) break;
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    const auto& fi = basis.forms[static_cast<std::size_t>(i)].coefficients;
                    const auto& fj = basis.forms[static_cast<std::size_t>(j)].coefficients;
                    if (m <= fi.size() && m <= fj.size()) g(i, j) += t * fi[m - 1] * std::conj(fj[m - 1]);
                }
        }
    }
    for (const auto& r : domain.rects) {
        const int xp = std::max(1, static_cast<int>(std::ceil((r.x1 - r.x0) / 0.25))) * refine;
        const int yp = std::max(1, static_cast<int>(std::ceil((r.y1 - r.y0) / opts.y_panel_width))) * refine;
        for_each_node(r.x0, r.x1, xp, [&](double x, double wx) {
            for_each_node(r.y0, r.y1, yp, [&](double y, double wy) { accumulate(x, y, wx * wy); });
        });
    }
    return g;
}

}  // namespace

Eigen::MatrixXcd petersson_gram(const CuspFormBasis& basis, const QuadratureDomain& domain,
                                const QuadratureOptions& opts) {
    if (basis.forms.empty()) return {};
    const double cutoff = opts.cutoff.value_or(std::max(4.0, 3.0 * basis.weight() / (4.0 * kPi)));
    const Eigen::MatrixXcd coarse = gram_once(basis, domain, cutoff, opts, 1);
    Eigen::MatrixXcd fine = gram_once(basis, domain, cutoff, opts, 2);
    const double scale = fine.cwiseAbs().maxCoeff();
    const double change = (fine - coarse).cwiseAbs().maxCoeff();
    if (scale > 0.0 && change > opts.tolerance * scale)
        throw QuadratureNotConverged("Petersson quadrature changed by " + std::to_string(change / scale) +
                                     " (relative) under refinement");
    // symmetrize away rounding
    fine = 0.5 * (fine + fine.adjoint()).eval();
    return fine;
}

CuspFormBasis orthonormal_basis(const CuspFormBasis& basis) {
    if (basis.forms.empty()) {
        CuspFormBasis out = basis;
        out.orthonormal = true;
        return out;
    }
    const Eigen::MatrixXcd g = basis.gram ? *basis.gram : petersson_gram(basis, QuadratureDomain::modular());
    // equilibrate so the singularity test measures conditioning, not scale
    const auto n = g.rows();
    Eigen::VectorXd scale(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(g(i, i).real() > 0.0)) throw GramSingular("Gram matrix has a non-positive diagonal entry");
        scale(i) = std::sqrt(g(i, i).real());
    }
    const Eigen::MatrixXcd gs = scale.cwiseInverse().asDiagonal() * g * scale.cwiseInverse().asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gs);
    const auto& ev = eig.eigenvalues();
    if (!(ev.minCoeff() >= 1e-12 * ev.maxCoeff()))
        throw GramSingular("Gram matrix is singular or indefinite (equilibrated eigenvalues " +
                           std::to_string(ev.minCoeff()) + " .. " + std::to_string(ev.maxCoeff()) + ")");
    const Eigen::LLT<Eigen::MatrixXcd> llt(gs);
    // G = (S L)(S L)^*, and A = (S L)^{-T} gives A^T G conj(A) = I
    const Eigen::MatrixXcd l = scale.asDiagonal() * Eigen::MatrixXcd(llt.matrixL());
    const Eigen::MatrixXcd a =
        l.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXcd::Identity(n, n));

    std::size_t m = basis.forms.front().length();
    for (const auto& f : basis.forms) m = std::max(m, f.length());
    CuspFormBasis out;
    for (Eigen::Index col = 0; col < n; ++col) {
        std::vector<cplx> coeffs(m, cplx{});
        for (Eigen::Index i = 0; i < n; ++i)
            for (std::size_t t = 0; t < basis.forms[static_cast<std::size_t>(i)].length(); ++t)
                coeffs[t] += a(i, col) * basis.forms[static_cast<std::size_t>(i)].coefficients[t];
        out.forms.push_back(make_form("onb[" + std::to_string(col) + "]", basis.weight(), std::move(coeffs),
                                      basis.forms.front().growth_exponent));
    }
    out.gram = (a.transpose() * g * a.conjugate()).eval();
    out.orthonormal = true;
    out.change_of_basis = a;
    return out;
}

double log_bergman_from_basis(const CuspFormBasis& basis, const UhpPoint& z) {
    if (basis.forms.empty()) return -INFINITY;
    return 2.0 * basis.k() * std::log(z.y()) + std::log(basis.values(z).squaredNorm());
}

double bergman_from_basis(const CuspFormBasis& basis, const UhpPoint& z) {
    if (basis.forms.empty()) return 0.0;
    return std::exp(log_bergman_from_basis(basis, z));
}

FirstCoefficientMass first_coefficient_mass(const CuspFormBasis& basis) {
    CompensatedSum s;
    for (const auto& f : basis.forms) s.add(std::norm(f.coefficients.front()));
    return {s.value(), s.value() > 0.0};
}

CuspFormBasis monomial_model(int n, int k, double y0) {
    if (n < 1 || k < 1) throw DomainError("monomial model needs n >= 1 and k >= 1");
    std::vector<QExpansionForm> forms;
    for (int m = 1; m <= n; ++m) {
        std::vector<cplx> coeffs(static_cast<std::size_t>(n), cplx{});
        const double norm2 = exponential_moment_tail(2 * k - 1, 4.0 * kPi * m, y0);
        coeffs[static_cast<std::size_t>(m - 1)] = 1.0 / std::sqrt(norm2);
        forms.push_back(make_form("q^" + std::to_string(m), 2 * k, std::move(coeffs)));
    }
    CuspFormBasis b = make_basis(std::move(forms));
    b.gram = Eigen::MatrixXcd::Identity(n, n);
    b.orthonormal = true;
    return b;
}

}  // namespace bergman
