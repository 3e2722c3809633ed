#include "bergman/errors.hpp"
#include "bergman/metric.hpp"
#include "bergman/symmetric.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace bergman;

namespace {

// K(z, w) = sum f_j(z) conj(f_j(w)) for an orthonormal family
cplx kernel(const CuspFormBasis& b, const UhpPoint& z, const UhpPoint& w) {
    return b.values(w).dot(b.values(z));
}

}  // namespace

TEST_CASE("dimension counts") {
    const auto d = dimensions(2, 3, 1);
    CHECK(d.n_k == 7);
    CHECK(d.r_k == 6);
    CHECK(dimensions(3, 10, 4).n_k == 19 * 2 + 9);
    CHECK_THROWS_AS(dimensions(1, 3, 1), HypothesisViolated);
    CHECK_THROWS_AS(dimensions(2, 3, 6), HypothesisViolated);
    CHECK_THROWS_AS(dimensions(2, 1, 1), HypothesisViolated);
    CHECK_THROWS_AS(dimensions(2, 3, 0), HypothesisViolated);
}

TEST_CASE("divisors") {
    const auto D = Divisor::from_points({UhpPoint(0, 1), UhpPoint(0.2, 1), UhpPoint(0, 1)});
    CHECK(D.points.size() == 2);
    CHECK(D.degree() == 3);
}

TEST_CASE("vanishing subspaces") {
    const auto onb = monomial_model(5, 6);
    const UhpPoint z(0.1, 0.8), w(-0.3, 1.1);
    const auto one = vanishing_subspace(onb, Divisor::from_points({z}));
    CHECK(one.dim() == 4);
    CHECK_FALSE(one.degenerate);
    const Eigen::MatrixXcd adj = one.coefficients.adjoint() * one.coefficients;
    CHECK((adj - Eigen::MatrixXcd::Identity(4, 4)).norm() < 1e-12);
    CHECK((onb.values(z).transpose() * one.coefficients).norm() < 1e-12 * onb.values(z).norm());

    const auto dbl = vanishing_subspace(onb, Divisor::from_points({z, z}));
    CHECK(dbl.dim() == 3);
    CHECK((onb.values(z, 1).transpose() * dbl.coefficients).norm() < 1e-10 * onb.values(z, 1).norm());

    const auto two = vanishing_subspace(onb, Divisor::from_points({z, w}));
    CHECK(two.dim() == 3);
    CHECK(full_frame(onb).dim() == 5);

    // the subspace kernel vanishes on the divisor and only shrinks as it grows
    const UhpPoint p(0.27, 0.95);
    CHECK(subspace_kernel_diagonal(one, onb, z) < 1e-20 * bergman_from_basis(onb, z));
    CHECK(subspace_kernel_diagonal(two, onb, p) <= subspace_kernel_diagonal(one, onb, p));
    CHECK(subspace_kernel_diagonal(one, onb, p) <= bergman_from_basis(onb, p));
    CHECK(subspace_kernel_diagonal(full_frame(onb), onb, p) == doctest::Approx(bergman_from_basis(onb, p)).epsilon(1e-13));

    // projection formula for a single point
    const double y = p.y();
    const double oracle = std::pow(y, 12) * (kernel(onb, p, p).real() - std::norm(kernel(onb, p, z)) / kernel(onb, z, z).real());
    CHECK(subspace_kernel_diagonal(one, onb, p) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("evaluation rank matches a pivoted LU") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> uy(0.3, 0.6);
    for (int t = 0; t < 40; ++t) {
        const int n = 3 + t % 4;
        const int d = 1 + t % 4;
        const auto onb = random_synthetic_basis(n, 4, n, 100 + t);
        // well separated points keep the evaluation matrix far from the rank threshold
        std::vector<UhpPoint> pts;
        for (int i = 0; i < d; ++i) pts.emplace_back(-0.4 + 0.27 * i, uy(rng));
        if (t % 5 == 0) pts.push_back(pts.front());
        const auto D = Divisor::from_points(pts);
        const auto frame = vanishing_subspace(onb, D);
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(evaluation_matrix(onb, D));
        lu.setThreshold(1e-10);
        CHECK(frame.evaluation_rank == lu.rank());
        CHECK(frame.dim() == n - lu.rank());
        CHECK(frame.degenerate == (lu.rank() < D.degree()));
    }
}

TEST_CASE("difference against the full kernel") {
    const UhpPoint z0(0.05, 0.9), z(0.2, 1.1);
    const auto D = Divisor::from_points({z0});
    auto basis_for_k = [](int k) { return monomial_model(5, k); };
    const auto t = ma_asymptotic_check(basis_for_k, D, z, {4, 6, 8, 10});
    REQUIRE(t.rows.size() == 4);
    for (const auto& r : t.rows) {
        const auto onb = monomial_model(5, r.k);
        const double oracle = -std::pow(z.y(), 2 * r.k) * std::norm(kernel(onb, z, z0)) / kernel(onb, z0, z0).real();
        CHECK(r.subspace - r.full == doctest::Approx(oracle).epsilon(1e-8));
        CHECK(r.scaled_difference == doctest::Approx((r.subspace - r.full) / r.k));
    }
    CHECK(t.bounded == (t.fitted_exponent <= 0.0));
    CHECK_THROWS_AS(ma_asymptotic_check(basis_for_k, D, z, {4, 6}), InsufficientData);
}

TEST_CASE("Fubini-Study form") {
    const int k = 6;
    const auto onb = monomial_model(6, k);
    SUBCASE("one point reduces to the kernel ratio") {
        const UhpPoint z(0.13, 0.9);
        const auto s = fs_form_formula(onb, {z});
        const auto r = bergman_metric_ratio(kernel_derivatives(BasisKernelSource(onb), z, DerivativeMethod::SeriesTermwise));
        CHECK(s.fs_volume_ratio == doctest::Approx(r.ratio).epsilon(1e-6));
        CHECK(fs_form_direct_oracle(onb, {z}).fs_volume_ratio == doctest::Approx(r.ratio).epsilon(1e-6));
    }
    SUBCASE("two routes agree") {
        for (const auto& z : {std::vector{UhpPoint(0.1, 0.8), UhpPoint(-0.2, 1.0)},
                              std::vector{UhpPoint(0.3, 0.6), UhpPoint(0.0, 0.9), UhpPoint(-0.35, 0.7)}}) {
            const auto a = fs_form_formula(onb, z);
            const auto b = fs_form_direct_oracle(onb, z);
            CHECK(a.fs_volume_ratio == doctest::Approx(b.fs_volume_ratio).epsilon(1e-5));
            CHECK((a.form - a.form.adjoint()).norm() < 1e-6 * a.form.norm());
        }
    }
    SUBCASE("order of the points does not matter") {
        const UhpPoint p(0.1, 0.8), q(-0.2, 1.0);
        CHECK(fs_form_formula(onb, {p, q}).fs_volume_ratio ==
              doctest::Approx(fs_form_formula(onb, {q, p}).fs_volume_ratio).epsilon(1e-5));
    }
    SUBCASE("separable slots") {
        const SeparableModel m{{monomial_model(3, 5), monomial_model(4, 7)}};
        const std::vector<UhpPoint> z{UhpPoint(0.1, 0.9), UhpPoint(0.3, 1.2)};
        const auto s = fs_form_formula(m, z);
        double prod = 1.0;
        for (int a = 0; a < 2; ++a) {
            const double r = bergman_metric_ratio(
                                 kernel_derivatives(BasisKernelSource(m.slots[a]), z[a], DerivativeMethod::SeriesTermwise))
                                 .ratio;
            CHECK(s.per_factor_ratios[a] == doctest::Approx(r).epsilon(1e-8));
            prod *= r;
        }
        CHECK(s.cross_term_max < 1e-8);
        CHECK(s.fs_volume_ratio == doctest::Approx(prod).epsilon(1e-8));
    }
    SUBCASE("coincident points") {
        CHECK_THROWS_AS(fs_form_formula(onb, {UhpPoint(0.1, 0.8), UhpPoint(0.1, 0.8)}), NearDiagonal);
    }
}

TEST_CASE("volume scan") {
    const auto onb = monomial_model(5, 6);
    const auto tuples = product_tuples(ScanGrid{-0.3, 0.3, 0.8, 1.2, 2, 2}.points(), 2);
    CHECK(tuples.size() == 16);
    const auto t = volume_ratio_scan([&](int, const std::vector<UhpPoint>& z) { return fs_form_formula(onb, z); }, tuples, {6});
    REQUIRE(t.summaries.size() == 1);
    CHECK(t.summaries[0].skipped == 4);
    CHECK(t.summaries[0].failures == 0);
    CHECK(t.summaries[0].limit == doctest::Approx(kRatioLimit * kRatioLimit));
    CHECK(t.summaries[0].within_limit);
}
