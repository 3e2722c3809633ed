#include "bergman/cusp_forms.hpp"
#include "bergman/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace bergman;

namespace {

CuspFormBasis load(const char* name) { return make_basis(read_forms_jsonl(std::string(BERGMAN_DATA_DIR "/") + name)); }

// int_{y0}^inf y^{s-1} e^{-a y} dy for integer s, by the finite sum formula
double incomplete_gamma_sum(int s, double a, double y0) {
    double term = 1.0, sum = 0.0;
    for (int j = 0; j < s; ++j) {
        if (j > 0) term *= a * y0 / j;
        sum += term;
    }
    return std::tgamma(s) / std::pow(a, s) * std::exp(-a * y0) * sum;
}

}  // namespace

TEST_CASE("q-expansion evaluation") {
    const auto f = make_form("f", 12, {1.0, -24.0, 252.0});
    const UhpPoint z(0.1, 1.0);
    const cplx q = q_coordinate(z).q;
    CHECK(std::abs(evaluate_q_expansion(f, z) - (q - 24.0 * q * q + 252.0 * q * q * q)) < 1e-16);
    const cplx tau = 2.0 * kPi * cplx(0, 1);
    const cplx d1 = tau * q - 48.0 * tau * q * q + 756.0 * tau * q * q * q;
    CHECK(std::abs(evaluate_q_derivative(f, z, 1) - d1) < 1e-14);
    const auto cf = evaluate_cusp_factor(f, q);
    CHECK(std::abs(cf.g - (1.0 - 24.0 * q + 252.0 * q * q)) < 1e-15);
    CHECK(std::abs(cf.dg_dq - (-24.0 + 504.0 * q)) < 1e-13);
    CHECK(truncation_bound(f, z) > 0.0);
    CHECK(truncation_bound(f, UhpPoint(0.1, 3.0)) < truncation_bound(f, z));
}

TEST_CASE("form validation and parsing") {
    CHECK_THROWS_AS(make_form("odd", 11, {1.0}), DomainError);
    CHECK_THROWS_AS(make_form("empty", 12, {}), DomainError);
    CHECK_THROWS_AS(make_form("nan", 12, {NAN}), DomainError);
    const auto f = parse_form_json(R"({"label": "c", "weight": 4, "coefficients": ["1", ["0.5", "-2"]]})");
    CHECK(f.weight == 4);
    CHECK(f.coefficients[1] == cplx(0.5, -2.0));
    CHECK_THROWS_AS(parse_form_json("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_form_json(R"({"label": "c", "coefficients": ["1"]})"), ConfigError);
    CHECK_THROWS_AS(read_forms_jsonl("/nonexistent/forms.jsonl"), ConfigError);

    const std::string path = "bad_forms.jsonl";
    {
        std::ofstream out(path);
        out << R"({"label": "a", "weight": 12, "coefficients": ["1"]})" << "\n" << "garbage\n";
    }
    try {
        read_forms_jsonl(path);
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(path + ":2") != std::string::npos);
    }
    std::remove(path.c_str());
    CHECK_THROWS_AS(make_basis({make_form("a", 12, {1.0}), make_form("b", 16, {1.0})}), DomainError);
}

TEST_CASE("modularity of the weight-12 form") {
    const auto delta = load("delta.jsonl").forms.at(0);
    CHECK(modularity_defect(delta, MoebiusTransform::inversion(), UhpPoint(0.1, 1.05)) < 1e-10);
    CHECK(modularity_defect(delta, MoebiusTransform(1, 1, 1, 2), UhpPoint(-0.2, 1.2)) < 1e-10);
    const auto truncated = make_form("short", 12, {1.0, -24.0});
    CHECK(modularity_defect(truncated, MoebiusTransform::inversion(), UhpPoint(0.1, 1.05)) > 1e-6);
}

TEST_CASE("exponential moment tail") {
    for (int s : {1, 5, 11, 23}) {
        const double a = 4.0 * kPi;
        CHECK(exponential_moment_tail(s, a, 1.0) == doctest::Approx(incomplete_gamma_sum(s, a, 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("strip integral of a monomial") {
    const auto basis = make_basis({make_form("q", 12, {1.0})});
    const auto g = petersson_gram(basis, QuadratureDomain::strip_above(0.0, 1.0));
    CHECK(g(0, 0).real() == doctest::Approx(incomplete_gamma_sum(11, 4 * kPi, 1.0)).epsilon(1e-10));
    // distinct monomials are orthogonal over a full period
    const auto two = make_basis({make_form("q", 12, {1.0}), make_form("q2", 12, {0.0, 1.0})});
    const auto g2 = petersson_gram(two, QuadratureDomain::strip_above(0.0, 0.7));
    CHECK(std::abs(g2(0, 1)) < 1e-12 * g2(0, 0).real());
    CHECK(g2(1, 1).real() == doctest::Approx(incomplete_gamma_sum(11, 8 * kPi, 0.7)).epsilon(1e-10));
}

TEST_CASE("Petersson norm of the weight-12 form") {
    const auto basis = load("delta.jsonl");
    const auto g = petersson_gram(basis, QuadratureDomain::modular());
    CHECK(g(0, 0).real() == doctest::Approx(1.0353620568e-6).epsilon(1e-9));
    QuadratureOptions fine;
    fine.x_panels = 8;
    fine.y_panel_width = 0.125;
    const auto g_fine = petersson_gram(basis, QuadratureDomain::modular(), fine);
    CHECK(g_fine(0, 0).real() == doctest::Approx(g(0, 0).real()).epsilon(1e-10));
    QuadratureOptions higher;
    higher.cutoff = 8.0;
    CHECK(petersson_gram(basis, QuadratureDomain::modular(), higher)(0, 0).real() ==
          doctest::Approx(g(0, 0).real()).epsilon(1e-10));
}

TEST_CASE("orthonormalization against a given Gram matrix") {
    auto basis = make_basis({make_form("a", 12, {1.0}), make_form("b", 12, {0.0, 1.0})});
    Eigen::MatrixXcd g(2, 2);
    g << 2.0, 1.0, 1.0, 2.0;
    basis.gram = g;
    const auto onb = orthonormal_basis(basis);
    REQUIRE(onb.orthonormal);
    const Eigen::MatrixXcd a = *onb.change_of_basis;
    const Eigen::MatrixXcd id = a.transpose() * g * a.conjugate();
    CHECK((id - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-14);
    // the kernel equals y^{2k} v^* G^{-T} v for the input values v
    const UhpPoint z(0.2, 0.9);
    const Eigen::VectorXcd v = basis.values(z);
    const double direct = std::pow(z.y(), 12) * (v.adjoint() * g.transpose().inverse() * v)(0, 0).real();
    CHECK(bergman_from_basis(onb, z) == doctest::Approx(direct).epsilon(1e-13));
    CHECK(log_bergman_from_basis(onb, z) == doctest::Approx(std::log(direct)).epsilon(1e-13));

    Eigen::MatrixXcd sing(2, 2);
    sing << 1.0, 1.0, 1.0, 1.0;
    basis.gram = sing;
    CHECK_THROWS_AS(orthonormal_basis(basis), GramSingular);
}

TEST_CASE("kernel does not depend on the chosen basis") {
    const auto raw = load("delta_w24.jsonl");
    const auto onb = orthonormal_basis(raw);
    const auto& f = raw.forms;
    std::vector<cplx> c1, c2;
    for (std::size_t m = 0; m < f[0].length(); ++m) {
        c1.push_back(f[0].coefficients[m] + cplx(0.0, 2.0) * f[1].coefficients[m]);
        c2.push_back(f[0].coefficients[m] - 3.0 * f[1].coefficients[m]);
    }
    const auto mixed = orthonormal_basis(make_basis({make_form("u", 24, c1), make_form("v", 24, c2)}));
    // each Gram matrix carries its own quadrature error
    for (const UhpPoint z : {UhpPoint(0.0, 1.0), UhpPoint(0.3, 1.7), UhpPoint(-0.45, 0.95)})
        CHECK(bergman_from_basis(mixed, z) == doctest::Approx(bergman_from_basis(onb, z)).epsilon(1e-6));
}

TEST_CASE("first coefficient mass") {
    const auto onb = orthonormal_basis(load("delta.jsonl"));
    const auto m = first_coefficient_mass(onb);
    CHECK(m.hypothesis_holds);
    CHECK(m.mass == doctest::Approx(1.0 / 1.0353620568e-6).epsilon(1e-8));
    auto zero = make_basis({make_form("q2", 12, {0.0, 1.0})});
    zero.orthonormal = true;
    CHECK_FALSE(first_coefficient_mass(zero).hypothesis_holds);
}

TEST_CASE("monomial model") {
    const int k = 7;
    const auto m = monomial_model(4, k, 1.0);
    REQUIRE(m.orthonormal);
    CHECK(m.size() == 4);
    CHECK(m.weight() == 14);
    for (std::size_t j = 0; j < 4; ++j) {
        const double norm2 = std::norm(m.forms[j].coefficients[j]) *
                             incomplete_gamma_sum(2 * k - 1, 4 * kPi * double(j + 1), 1.0);
        CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto g = petersson_gram(m, QuadratureDomain::strip_above(0.0, 1.0));
    CHECK((g - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-9);
}
