#include "bergman/cusp_forms.hpp"
#include "bergman/errors.hpp"
#include "bergman/kernel.hpp"

#include <doctest.h>

#include <cmath>

using namespace bergman;

namespace {

double pref(int k) { return (2.0 * k - 1.0) / (4.0 * kPi); }

// sum over |n| <= N of the translation terms (2iy / (2iy - n))^{2k}
double translation_sum(const UhpPoint& z, int k, long n_max) {
    std::complex<double> s = 0.0;
    const cplx t(0.0, 2.0 * z.y());
    for (long n = -n_max; n <= n_max; ++n) s += std::pow(t / (t - double(n)), 2 * k);
    return pref(k) * s.real();
}

}  // namespace

TEST_CASE("constants") {
    CHECK(identity_term(6) == doctest::Approx(11.0 / (4.0 * kPi)).epsilon(1e-15));
    for (int k : {2, 3, 7, 20, 80}) {
        const double direct = std::tgamma(k - 0.5) / std::tgamma(k);
        CHECK(gamma_ratio(k) == doctest::Approx(direct).epsilon(1e-13));
    }
    const double y = 1.3;
    CHECK(parabolic_term_bound(y, 5) ==
          doctest::Approx(y * 9.0 / std::sqrt(kPi) * std::tgamma(4.5) / std::tgamma(5.0)).epsilon(1e-13));

    // the hyperbolic-block constant at r = 1, k = 3
    const double r = 1.0;
    const double c4 = std::cosh(r / 4), c2 = std::cosh(r / 2), s4 = std::sinh(r / 4);
    const double expected = 5.0 / (4 * kPi) * (16.0 / (c4 * c4) + 8.0 / (c2 * c2 * c2)) +
                            5.0 / (2 * kPi * s4 * s4) * (1.0 / (c2 * c2 * c2) + 1.0 / (c2 * c2));
    CHECK(cx_constant(1.0, 3).value == doctest::Approx(expected).epsilon(1e-13));
    CHECK(cx_constant(1.0, 3).value == doctest::Approx(26.709).epsilon(1e-4));
    CHECK(cx_constant(INFINITY, 4).value == 0.0);
    CHECK_THROWS_AS(cx_constant(0.0, 4), DomainError);
    CHECK(cx_constant(2.0, 10).value < cx_constant(1.0, 10).value);
}

TEST_CASE("series term magnitude equals a power of the displacement") {
    const UhpPoint z(0.17, 0.83);
    for (const MoebiusTransform& g : {MoebiusTransform(2, 1, 1, 1), MoebiusTransform(1, 3, 0, 1),
                                      MoebiusTransform(3, -2, 5, -3), MoebiusTransform::inversion()}) {
        const int k = 5;
        const double c2 = cosh2_half_distance(z, apply_moebius(g, z));
        const LogPolar t = poincare_term(g, z, k);
        CHECK(t.log_abs == doctest::Approx(std::log(pref(k)) - k * std::log(c2)).epsilon(1e-12));
    }
    const LogPolar id = poincare_term(MoebiusTransform::identity(), z, 4);
    CHECK(std::exp(id.log_abs) == doctest::Approx(pref(4)).epsilon(1e-14));
    CHECK(std::abs(std::remainder(id.arg, 2 * kPi)) < 1e-14);
}

TEST_CASE("trivial group gives the identity term") {
    for (int k : {2, 3, 12}) {
        const auto e = bergman_kernel_diagonal(FuchsianGroup::trivial(), UhpPoint(0.4, 0.2), k, 1000.0, 10);
        CHECK(e.value_diagonal == doctest::Approx(pref(k)).epsilon(1e-15));
        CHECK(alpha_decomposition(e, k) == doctest::Approx(0.0));
    }
}

TEST_CASE("translation group matches a direct lattice sum") {
    for (int k : {3, 6, 10}) {
        for (const UhpPoint z : {UhpPoint(0.0, 1.0), UhpPoint(0.31, 0.55), UhpPoint(0.9, 2.7)}) {
            const double bound = 1000.0;
            const long n_max = std::lround(std::floor(2.0 * z.y() * std::sqrt(bound - 1.0)));
            const auto e = bergman_kernel_diagonal(FuchsianGroup::translations(), z, k, bound, 100000);
            REQUIRE(e.truncation.exhaustive);
            CHECK(e.truncation.terms_used == std::size_t(2 * n_max + 1));
            const double expected = translation_sum(z, k, n_max);
            // the lattice sum nearly cancels (Poisson summation), so compare on the scale of single terms
            CHECK(std::abs(e.value_diagonal - expected) <= 1e-13 * pref(k));
            CHECK(std::abs(e.rest_part) == 0.0);
            CHECK(std::abs(e.imaginary_residual) <= 1e-12 * e.value_diagonal);
            // the parabolic part is bounded as claimed
            CHECK(std::abs(alpha_decomposition(e, k)) <= parabolic_term_bound(z.y(), k));
        }
    }
}

TEST_CASE("modular kernel is invariant and positive") {
    const int k = 6;
    const UhpPoint z(0.21, 1.12);
    const auto base = bergman_kernel_diagonal(FuchsianGroup::modular(), z, k, 1000.0, 1000000);
    REQUIRE(base.truncation.exhaustive);
    CHECK(base.value_diagonal > 0.0);
    CHECK_FALSE(base.imaginary_flagged);
    for (const MoebiusTransform& g : {MoebiusTransform::translation(1), MoebiusTransform(1, 1, 1, 2),
                                      MoebiusTransform::inversion()}) {
        const auto moved = bergman_kernel_diagonal(FuchsianGroup::modular(), apply_moebius(g, z), k, 1000.0, 1000000);
        CHECK(moved.value_diagonal == doctest::Approx(base.value_diagonal).epsilon(1e-9));
    }
    // truncation tail shrinks with the bound
    const auto coarse = bergman_kernel_diagonal(FuchsianGroup::modular(), z, k, 50.0, 1000000);
    CHECK(coarse.truncation.tail_estimate > base.truncation.tail_estimate);
    CHECK(std::abs(coarse.value_diagonal - base.value_diagonal) <= coarse.truncation.tail_estimate);
    const auto cut = bergman_kernel_diagonal(FuchsianGroup::modular(), z, k, 1000.0, 10);
    CHECK_FALSE(cut.truncation.exhaustive);
    CHECK(std::isinf(cut.truncation.tail_estimate));
}

TEST_CASE("series agrees with the weight-12 cusp form") {
    const auto onb = orthonormal_basis(make_basis(read_forms_jsonl(BERGMAN_DATA_DIR "/delta.jsonl")));
    for (const UhpPoint z : {UhpPoint(0.0, 1.0), UhpPoint(0.5, std::sqrt(3.0) / 2), UhpPoint(-0.2, 1.4)}) {
        const auto e = bergman_kernel_diagonal(FuchsianGroup::modular(), z, 6, 1000.0, 1000000);
        CHECK(e.value_diagonal == doctest::Approx(bergman_from_basis(onb, z)).epsilon(1e-8));
    }
}

TEST_CASE("off-diagonal kernel") {
    const int k = 6;
    const UhpPoint z(0.1, 0.9), w(-0.3, 1.3);
    const cplx zw = bergman_kernel_offdiagonal(FuchsianGroup::modular(), z, w, k, 2000.0, 1000000);
    const cplx wz = bergman_kernel_offdiagonal(FuchsianGroup::modular(), w, z, k, 2000.0, 1000000);
    CHECK(std::abs(zw - std::conj(wz)) <= 1e-9 * std::abs(zw));
    const cplx zz = bergman_kernel_offdiagonal(FuchsianGroup::modular(), z, z, k, 2000.0, 1000000);
    const auto diag = bergman_kernel_diagonal(FuchsianGroup::modular(), z, k, 2000.0, 1000000);
    CHECK(zz.real() == doctest::Approx(diag.value_diagonal).epsilon(1e-10));
}

TEST_CASE("orbit sums") {
    const int k = 6;
    const UhpPoint z(0.07, 1.05);
    const auto orbit = enumerate_group_elements(FuchsianGroup::modular(), z, 1000.0, 1000000);
    const auto sums = poincare_sums(orbit.elements, z, k);
    CHECK(sums.norm == doctest::Approx(bergman_kernel_diagonal(orbit, k).value_diagonal).epsilon(1e-13));
    CHECK(poincare_log_norm(orbit.elements, z, k) == doctest::Approx(std::log(sums.norm)).epsilon(1e-13));
    // d log B / dz against a central difference of log B = log||B|| - 2k log y
    const double h = 1e-5;
    auto logb = [&](double x, double y) {
        return poincare_log_norm(orbit.elements, UhpPoint(x, y), k) - 2.0 * k * std::log(y);
    };
    const double lx = (logb(z.x() + h, z.y()) - logb(z.x() - h, z.y())) / (2 * h);
    const double ly = (logb(z.x(), z.y() + h) - logb(z.x(), z.y() - h)) / (2 * h);
    const cplx dz = 0.5 * cplx(lx, -ly);
    // the derivative of a real function along z is half of the gradient
    CHECK(std::abs(dz - cplx(sums.d_log.real(), sums.d_log.imag())) <= 1e-6 * (1 + std::abs(dz)));
}
