#pragma once

#include "bergman/hyperbolic.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace bergman {

/// A finitely generated Fuchsian group with a width-one cusp at i*infinity.
///
/// Standing hypotheses of the theory (genus >= 2, a single cusp) are carried
/// as metadata only; nothing here enforces them.
struct FuchsianGroup {
    std::string label;
    std::vector<MoebiusTransform> generators;
    double cusp_width = 1.0;
    std::optional<int> genus_hint;
    std::optional<int> cusp_count_hint;

    /// True when genus >= 2 and exactly one cusp are both declared.
    bool meets_standing_hypotheses() const;

    static FuchsianGroup trivial();
    /// Generated by T = (1,1;0,1) alone.
    static FuchsianGroup translations();
    /// PSL2(Z), generated by T and S = (0,-1;1,0).
    static FuchsianGroup modular();
    /// Gamma_0(4) modulo sign: free on T and (1,0;4,1).
    static FuchsianGroup free2();

    /// Resolves "modular", "free2", "translations", "trivial" or "file:<path>".
    static FuchsianGroup from_name(const std::string& name);
    /// JSON object {"label": str, "generators": [[a,b,c,d], ...], ...}.
    static FuchsianGroup from_json_file(const std::string& path);
};

struct OrbitElement {
    MoebiusTransform g;
    double cosh2_half_displacement;
};

struct OrbitEnumeration {
    UhpPoint base_point;
    std::vector<OrbitElement> elements;  ///< ascending displacement, then matrix order
    double displacement_bound = 1.0;
    bool exhaustive = false;
    /// Number of group elements visited by the search (within the exploration ball).
    std::size_t explored = 0;
};

struct EnumerationOptions {
    /// Extra hyperbolic distance explored beyond the requested ball, in
    /// multiples of the largest generator displacement at the base point.
    double margin_factor = 2.0;
};

/// {(1,n;0,1) : n_min <= n <= n_max}.
std::vector<MoebiusTransform> stabilizer_elements(long n_min, long n_max);

/// Breadth-first closure over right multiplication by generators and their
/// inverses, restricted to a displacement ball slightly larger than the
/// requested one. Elements with cosh^2(d(z, gz)/2) <= displacement_bound are
/// returned, deduplicated in PSL2. When more than `budget` elements would be
/// visited the search stops and `exhaustive` is false.
OrbitEnumeration enumerate_group_elements(const FuchsianGroup& group, const UhpPoint& z,
                                          double displacement_bound, std::size_t budget,
                                          const EnumerationOptions& opts = {});

enum class Region { CompactPart, CuspNeighborhood };

struct RegionTag {
    Region tag;
    double threshold_height;  ///< c_gamma * log(k) / (2 pi)
};

const char* to_string(Region r);

/// CuspNeighborhood iff y >= c_gamma log(k) / 2pi.
RegionTag classify_region(const UhpPoint& z, int k, double c_gamma);

inline constexpr double kDefaultCGamma = 4.0 * kPi;

/// Minimum over samples of d(z, gz) over enumerated g outside the cusp
/// stabilizer: an upper bound for the injectivity radius on the samples.
/// Throws BudgetExceeded if an enumeration is incomplete.
double injectivity_radius_estimate(const FuchsianGroup& group, const std::vector<UhpPoint>& samples,
                                   std::size_t budget, double displacement_bound = 64.0);

}  // namespace bergman
