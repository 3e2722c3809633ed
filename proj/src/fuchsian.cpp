#include "bergman/fuchsian.hpp"

#include "bergman/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>

namespace bergman {

namespace {

using Key = std::array<long long, 4>;

Key key_of(const MoebiusTransform& g) {
    constexpr double scale = 1e6;
    return {std::llround(g.a() * scale), std::llround(g.b() * scale), std::llround(g.c() * scale),
            std::llround(g.d() * scale)};
}

// cosh^2(d(z, gz)/2) = |c|z|^2 + dz - a conj(z) - b|^2 / (4 y^2)
double displacement(const MoebiusTransform& g, const UhpPoint& z) {
    const cplx w = z.z();
    const cplx p = g.c() * std::norm(w) + g.d() * w - g.a() * std::conj(w) - g.b();
    return std::norm(p) / (4.0 * z.y() * z.y());
}

}  // namespace

bool FuchsianGroup::meets_standing_hypotheses() const {
    return genus_hint && *genus_hint >= 2 && cusp_count_hint && *cusp_count_hint == 1;
}

FuchsianGroup FuchsianGroup::trivial() { return {"trivial", {}, 1.0, std::nullopt, std::nullopt}; }

FuchsianGroup FuchsianGroup::translations() {
    return {"translations", {MoebiusTransform::translation(1)}, 1.0, std::nullopt, std::nullopt};
}

FuchsianGroup FuchsianGroup::modular() {
    return {"modular", {MoebiusTransform::translation(1), MoebiusTransform::inversion()}, 1.0, 0, 1};
}

FuchsianGroup FuchsianGroup::free2() {
    return {"free2", {MoebiusTransform::translation(1), MoebiusTransform(1, 0, 4, 1)}, 1.0, 0, 3};
}

FuchsianGroup FuchsianGroup::from_name(const std::string& name) {
    if (name == "modular") return modular();
    if (name == "free2") return free2();
    if (name == "translations") return translations();
    if (name == "trivial") return trivial();
    if (name.rfind("file:", 0) == 0) return from_json_file(name.substr(5));
    throw ConfigError("unknown group '" + name + "' (expected modular, free2, translations, trivial or file:<path>)");
}

FuchsianGroup FuchsianGroup::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open group file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed group file " + path + ": " + e.what());
    }
    FuchsianGroup g;
    g.label = j.value("label", path);
    if (!j.contains("generators") || !j["generators"].is_array())
        throw ConfigError("group file " + path + " lacks a \"generators\" array");
    for (const auto& m : j["generators"]) {
        if (!m.is_array() || m.size() != 4) throw ConfigError("generator must be [a,b,c,d] in " + path);
        try {
            g.generators.emplace_back(m[0].get<double>(), m[1].get<double>(), m[2].get<double>(),
                                      m[3].get<double>());
        } catch (const DomainError& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
    if (j.contains("genus")) g.genus_hint = j["genus"].get<int>();
    if (j.contains("cusps")) g.cusp_count_hint = j["cusps"].get<int>();
    return g;
}

std::vector<MoebiusTransform> stabilizer_elements(long n_min, long n_max) {
    if (n_min > n_max) throw DomainError("stabilizer range is empty");
    std::vector<MoebiusTransform> out;
    out.reserve(static_cast<std::size_t>(n_max - n_min + 1));
    for (long n = n_min; n <= n_max; ++n) out.push_back(MoebiusTransform::translation(static_cast<double>(n)));
    return out;
}

OrbitEnumeration enumerate_group_elements(const FuchsianGroup& group, const UhpPoint& z,
                                          double displacement_bound, std::size_t budget,
                                          const EnumerationOptions& opts) {
    if (!(displacement_bound >= 1.0)) throw DomainError("displacement bound must be >= 1");
    if (budget == 0) throw DomainError("budget must be positive");

    std::vector<MoebiusTransform> steps;
    for (const auto& s : group.generators) {
        for (const auto& t : {s, s.inverse()}) {
            if (t.is_identity()) continue;
            if (std::find(steps.begin(), steps.end(), t) == steps.end()) steps.push_back(t);
        }
    }
    double step_length = 0.0;
    for (const auto& s : steps)
        step_length = std::max(step_length, distance_from_cosh2_half(displacement(s, z)));
    const double explore_bound = cosh2_half_from_distance(distance_from_cosh2_half(displacement_bound) +
                                                          opts.margin_factor * step_length);

    OrbitEnumeration out{z, {}, displacement_bound, true, 0};
    std::map<Key, bool> seen;
    std::deque<MoebiusTransform> queue;
    const auto id = MoebiusTransform::identity();
    seen.emplace(key_of(id), true);
    queue.push_back(id);
    out.elements.push_back({id, 1.0});

    while (!queue.empty()) {
        const MoebiusTransform g = queue.front();
        queue.pop_front();
        for (const auto& s : steps) {
            const MoebiusTransform h = g * s;
            const double disp = displacement(h, z);
            if (disp > explore_bound) continue;
            if (!seen.emplace(key_of(h), true).second) continue;
            if (seen.size() > budget) {
                out.exhaustive = false;
                queue.clear();
                break;
            }
            queue.push_back(h);
            if (disp <= displacement_bound) out.elements.push_back({h, disp});
        }
    }
    out.explored = seen.size();
    std::sort(out.elements.begin(), out.elements.end(), [](const OrbitElement& l, const OrbitElement& r) {
        if (l.cosh2_half_displacement != r.cosh2_half_displacement)
            return l.cosh2_half_displacement < r.cosh2_half_displacement;
        return l.g < r.g;
    });
    return out;
}

const char* to_string(Region r) { return r == Region::CompactPart ? "compact" : "cusp"; }

RegionTag classify_region(const UhpPoint& z, int k, double c_gamma) {
    if (k < 2) throw DomainError("classify_region needs k >= 2");
    if (!(c_gamma > 0.0)) throw DomainError("c_gamma must be positive");
    const double threshold = c_gamma * std::log(static_cast<double>(k)) / (2.0 * kPi);
    return {z.y() >= threshold ? Region::CuspNeighborhood : Region::CompactPart, threshold};
}

double injectivity_radius_estimate(const FuchsianGroup& group, const std::vector<UhpPoint>& samples,
                                   std::size_t budget, double displacement_bound) {
    if (samples.empty()) throw DomainError("injectivity radius needs at least one sample");
    double best = std::numeric_limits<double>::infinity();
    const bool all_parabolic = std::all_of(group.generators.begin(), group.generators.end(),
                                           [](const MoebiusTransform& g) { return g.fixes_cusp(); });
    if (all_parabolic) return best;
    for (const auto& z : samples) {
        const auto orbit = enumerate_group_elements(group, z, displacement_bound, budget);
        if (!orbit.exhaustive) throw BudgetExceeded("orbit enumeration incomplete at sample " + std::to_string(z.x()) + "," + std::to_string(z.y()));
        for (const auto& e : orbit.elements) {
            if (e.g.fixes_cusp()) continue;
            best = std::min(best, distance_from_cosh2_half(e.cosh2_half_displacement));
            break;  // sorted ascending
        }
    }
    return best;
}

}  // namespace bergman
