#pragma once

#include "bergman/hyperbolic.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bergman {

/// A cusp form f = sum_{m=1}^{M} a_m q^m, truncated at M.
struct QExpansionForm {
    std::string label;
    int weight = 0;  ///< 2k
    std::vector<cplx> coefficients;  ///< a_1 .. a_M
    /// Declared exponent alpha with |a_m| <~ m^alpha; feeds truncation bounds only.
    double growth_exponent = 0.0;

    int k() const { return weight / 2; }
    std::size_t length() const { return coefficients.size(); }
};

/// Builds a form and validates it; growth_exponent defaults to (2k-1)/2 + 0.01.
QExpansionForm make_form(std::string label, int weight, std::vector<cplx> coefficients,
                         std::optional<double> growth_exponent = std::nullopt);

/// One form per line: {"label", "weight", "coefficients": ["1", "-24", ...]}
/// with complex entries as two-element arrays ["re", "im"].
std::vector<QExpansionForm> read_forms_jsonl(const std::string& path);
QExpansionForm parse_form_json(const std::string& line);

cplx evaluate_q_expansion(const QExpansionForm& f, const UhpPoint& z);

/// (d/dz)^order f(z) = sum a_m (2 pi i m)^order q^m.
cplx evaluate_q_derivative(const QExpansionForm& f, const UhpPoint& z, int order = 1);

/// Bound on the omitted sum over m > M assuming |a_m| <= C m^alpha with C
/// fitted on the ingested coefficients.
double truncation_bound(const QExpansionForm& f, const UhpPoint& z);

/// f = q g(q) near the cusp: returns g and dg/dq.
struct CuspFactor {
    cplx g;
    cplx dg_dq;
};
CuspFactor evaluate_cusp_factor(const QExpansionForm& f, cplx q);

/// Relative defect |f(gz) - (cz+d)^{2k} f(z)| / |(cz+d)^{2k} f(z)|.
double modularity_defect(const QExpansionForm& f, const MoebiusTransform& g, const UhpPoint& z);

struct CuspFormBasis {
    std::vector<QExpansionForm> forms;
    std::optional<Eigen::MatrixXcd> gram;
    bool orthonormal = false;
    /// Column a holds the coefficients of orthonormal form a in the input forms.
    std::optional<Eigen::MatrixXcd> change_of_basis;

    int weight() const;
    int k() const { return weight() / 2; }
    std::size_t size() const { return forms.size(); }

    /// Values (f_1(z), ..., f_n(z)).
    Eigen::VectorXcd values(const UhpPoint& z, int derivative_order = 0) const;
};

/// Throws DomainError on mixed weights.
CuspFormBasis make_basis(std::vector<QExpansionForm> forms);

/// Integration region for the Petersson product. The optional strip part is
/// {x0 <= x <= x0 + 1, y >= lower(x)}; above its highest point the
/// x-integral is taken exactly by Parseval, so only the strip carries a
/// tail. Rectangles are finite boxes.
struct QuadratureDomain {
    struct Strip {
        double x0 = 0.0;
        std::function<double(double)> lower;
        double lower_max = 1.0;
    };
    struct Rect {
        double x0, x1, y0, y1;
    };
    std::optional<Strip> strip;
    std::vector<Rect> rects;

    /// {|x| <= 1/2, |z| >= 1}, the standard fundamental domain of PSL2(Z).
    static QuadratureDomain modular();
    static QuadratureDomain strip_above(double x0, double y0);
};

struct QuadratureOptions {
    double tolerance = 1e-8;          ///< relative Richardson tolerance
    std::optional<double> cutoff;     ///< Y; default max(4, 3 * 2k / 4pi)
    int x_panels = 4;
    double y_panel_width = 0.25;
};

/// Hermitian matrix <f_i, f_j> = int y^{2k} f_i conj(f_j) dx dy / y^2.
/// Throws QuadratureNotConverged when halving the panels changes the matrix
/// by more than tolerance * max|G|.
Eigen::MatrixXcd petersson_gram(const CuspFormBasis& basis, const QuadratureDomain& domain,
                                const QuadratureOptions& opts = {});

/// int_Y^infty y^{s-1} e^{-a y} dy for integer s >= 1, a > 0.
double exponential_moment_tail(int s, double a, double from);

/// Orthonormalizes against basis.gram (computed on the modular domain when
/// absent). Throws GramSingular if min eigenvalue < 1e-12 * max eigenvalue.
CuspFormBasis orthonormal_basis(const CuspFormBasis& basis);

/// y^{2k} sum_j |f_j(z)|^2 for an orthonormal basis.
double bergman_from_basis(const CuspFormBasis& basis, const UhpPoint& z);
double log_bergman_from_basis(const CuspFormBasis& basis, const UhpPoint& z);

struct FirstCoefficientMass {
    double mass;
    bool hypothesis_holds;  ///< mass > 0
};
FirstCoefficientMass first_coefficient_mass(const CuspFormBasis& basis);

/// Orthonormal basis {q^m / ||q^m||, m = 1..n} of the span of monomials,
/// normed over the strip 0 <= x <= 1, y >= y0 (Parseval makes them
/// orthogonal). A synthetic multi-form model usable at any k >= 1.
CuspFormBasis monomial_model(int n, int k, double y0 = 1.0);

}  // namespace bergman
