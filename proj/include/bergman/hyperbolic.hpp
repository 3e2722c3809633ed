#pragma once

// Upper half-plane primitives: points, Moebius transforms, the cosh^2
// distance formula and the cusp coordinate q = exp(2 pi i z).

#include <complex>
#include <compare>
#include <iosfwd>

namespace bergman {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// A point x + iy of the upper half-plane.
class UhpPoint {
public:
    /// Throws DomainError unless y > 0 and both coordinates are finite.
    UhpPoint(double x, double y);
    static UhpPoint from_complex(cplx z) { return {z.real(), z.imag()}; }

    double x() const { return x_; }
    double y() const { return y_; }
    cplx z() const { return {x_, y_}; }

    bool operator==(const UhpPoint&) const = default;

private:
    double x_;
    double y_;
};

std::ostream& operator<<(std::ostream& os, const UhpPoint& p);

/// Element of PSL2(R), stored with canonical sign.
///
/// The sign is chosen so that the first entry of (a, b) that is nonzero is
/// positive; a transform and its negation therefore compare equal.
class MoebiusTransform {
public:
    /// Throws DomainError if |ad - bc - 1| > 1e-12 * scale.
    MoebiusTransform(double a, double b, double c, double d);

    static MoebiusTransform identity() { return {1, 0, 0, 1}; }
    static MoebiusTransform translation(double n) { return {1, n, 0, 1}; }
    static MoebiusTransform inversion() { return {0, -1, 1, 0}; }

    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }
    double d() const { return d_; }

    MoebiusTransform inverse() const { return {d_, -b_, -c_, a_}; }

    /// c == 0 within tolerance: the transform fixes i*infinity.
    bool fixes_cusp(double tol = 1e-12) const;
    bool is_identity(double tol = 1e-12) const;

    friend MoebiusTransform operator*(const MoebiusTransform& l, const MoebiusTransform& r);

    /// Lexicographic on (a, b, c, d) of the canonical representative.
    auto operator<=>(const MoebiusTransform&) const = default;

private:
    struct Unchecked {};
    MoebiusTransform(Unchecked, double a, double b, double c, double d);
    void canonicalize();

    double a_, b_, c_, d_;
};

std::ostream& operator<<(std::ostream& os, const MoebiusTransform& g);

/// The cusp coordinate q(z) = e^{2 pi i z}.
struct CuspCoordinate {
    cplx q;
    double modulus() const { return std::abs(q); }
};

/// (az + b)/(cz + d). Throws DomainError when |cz + d| < 1e-300.
UhpPoint apply_moebius(const MoebiusTransform& g, const UhpPoint& z);

/// Im(gz) = y / |cz + d|^2.
double transformed_height(const MoebiusTransform& g, const UhpPoint& z);

/// cosh^2(d_hyp(z, w) / 2) = |z - conj(w)|^2 / (4 y v); always >= 1.
double cosh2_half_distance(const UhpPoint& z, const UhpPoint& w);

/// d_hyp(z, w) = 2 arccosh(sqrt(cosh2_half_distance(z, w))).
double hyperbolic_distance(const UhpPoint& z, const UhpPoint& w);

/// Inverse of the relation above: cosh^2(d/2) for a distance d.
double cosh2_half_from_distance(double d);
double distance_from_cosh2_half(double c2);

CuspCoordinate q_coordinate(const UhpPoint& z);

}  // namespace bergman
