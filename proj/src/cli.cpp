#include "bergman/cli.hpp"

#include "bergman/cusp_forms.hpp"
#include "bergman/errors.hpp"
#include "bergman/fuchsian.hpp"
#include "bergman/kernel.hpp"
#include "bergman/metric.hpp"
#include "bergman/parallel.hpp"
#include "bergman/symmetric.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

namespace bergman::cli {

namespace {

using ojson = nlohmann::ordered_json;

std::string g12(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.12g}", v);
}

ojson num(double v) {
    if (!std::isfinite(v)) return g12(v);
    return std::stod(fmt::format("{:.12g}", v));
}

ojson point_json(const UhpPoint& z) { return ojson::array({num(z.x()), num(z.y())}); }

std::string csv_safe(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

std::vector<int> parse_k_list(const std::string& spec) {
    std::vector<int> ks;
    std::stringstream ss(spec);
    try {
        for (std::string item; std::getline(ss, item, ',');) {
            const auto dots = item.find("..");
            if (dots == std::string::npos) {
                ks.push_back(std::stoi(item));
            } else {
                const int a = std::stoi(item.substr(0, dots)), b = std::stoi(item.substr(dots + 2));
                if (b < a) throw ConfigError("empty k range " + item);
                for (int k = a; k <= b; ++k) ks.push_back(k);
            }
        }
    } catch (const std::logic_error&) {
        throw ConfigError("cannot parse k list: " + spec);
    }
    if (ks.empty()) throw ConfigError("empty k list");
    for (int k : ks)
        if (k < 1) throw ConfigError("k must be positive: " + spec);
    return ks;
}

UhpPoint parse_point(const std::string& spec) {
    const auto comma = spec.find(',');
    if (comma == std::string::npos) throw ConfigError("point must be \"x,y\": " + spec);
    try {
        return {std::stod(spec.substr(0, comma)), std::stod(spec.substr(comma + 1))};
    } catch (const std::logic_error&) {
        throw ConfigError("point must be \"x,y\": " + spec);
    }
}

std::vector<double> parse_reals(const std::string& spec) {
    std::vector<double> v;
    std::stringstream ss(spec);
    try {
        for (std::string item; std::getline(ss, item, ',');) v.push_back(std::stod(item));
    } catch (const std::logic_error&) {
        throw ConfigError("cannot parse number list: " + spec);
    }
    return v;
}

CuspFormBasis load_orthonormal(const std::string& path) {
    if (path.empty()) throw ConfigError("--forms is required");
    return orthonormal_basis(make_basis(read_forms_jsonl(path)));
}

// Writes to --out when given, else to the command's output stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw ConfigError("cannot write " + path);
            stream_ = &file_;
        }
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

struct Common {
    int threads = default_thread_count();
    std::string out;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--out", c.out, "output path (default stdout)");
}

// Injects the keys of a JSON config object as flags right after the
// subcommand, so explicit flags (which come later) take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw ConfigError("--config needs a path");
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (config_path.empty()) return args;
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file " + config_path);
    nlohmann::json cfg;
    try {
        in >> cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed config " + config_path + ": " + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object: " + config_path);
    std::vector<std::string> injected;
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            if (value.get<bool>()) injected.push_back(flag);
        } else if (value.is_string()) {
            injected.insert(injected.end(), {flag, value.get<std::string>()});
        } else if (value.is_number_integer()) {
            injected.insert(injected.end(), {flag, std::to_string(value.get<long long>())});
        } else if (value.is_number()) {
            injected.insert(injected.end(), {flag, fmt::format("{:.17g}", value.get<double>())});
        } else {
            throw ConfigError("config value for " + key + " must be a scalar");
        }
    }
    const auto at = args.empty() ? args.end() : args.begin() + 1;
    args.insert(at, injected.begin(), injected.end());
    return args;
}

// ---------------------------------------------------------------- ingest

struct IngestOpts {
    Common common;
    std::string forms;
    std::string group = "modular";
    bool validate = false;
    double tol = 1e-8;
};

int cmd_ingest(const IngestOpts& o, std::ostream& out) {
    const auto forms = read_forms_jsonl(o.forms);
    const FuchsianGroup group = FuchsianGroup::from_name(o.group);
    const std::vector<UhpPoint> probes{{0.1, 1.1}, {-0.27, 0.95}, {0.4, 1.3}};
    ojson report;
    report["forms_file"] = o.forms;
    report["forms"] = ojson::array();
    bool valid = true;
    for (const auto& f : forms) {
        ojson e;
        e["label"] = f.label;
        e["weight"] = f.weight;
        e["length"] = f.length();
        e["growth_exponent"] = num(f.growth_exponent);
        e["truncation_bound_at_i"] = num(truncation_bound(f, {0.0, 1.0}));
        if (o.validate) {
            double defect = 0.0;
            for (const auto& g : group.generators)
                for (const auto& z : probes) defect = std::max(defect, modularity_defect(f, g, z));
            e["modularity_defect"] = num(defect);
            if (!(defect <= o.tol)) valid = false;
        }
        report["forms"].push_back(e);
    }
    if (o.validate) {
        report["group"] = group.label;
        report["tolerance"] = num(o.tol);
        report["valid"] = valid;
    }
    Sink sink(o.common.out, out);
    *sink << report.dump(2) << "\n";
    return valid ? kPass : kSuiteFailure;
}

// ---------------------------------------------------------------- kernel

struct KernelOpts {
    Common common;
    std::string group = "modular";
    int k = 6;
    std::string z = "0,1";
    double bound = 1000.0;
    std::size_t budget = 2000000;
    bool json = false;
};

int cmd_kernel(const KernelOpts& o, std::ostream& out) {
    const FuchsianGroup group = FuchsianGroup::from_name(o.group);
    const UhpPoint z = parse_point(o.z);
    const KernelEvaluation ev = bergman_kernel_diagonal(group, z, o.k, o.bound, o.budget);
    ojson r;
    r["group"] = group.label;
    r["k"] = o.k;
    r["z"] = point_json(z);
    r["value_diagonal"] = num(ev.value_diagonal);
    r["identity_part"] = num(ev.identity_part);
    r["parabolic_part"] = ojson::array({num(ev.parabolic_part.real()), num(ev.parabolic_part.imag())});
    r["rest_part"] = ojson::array({num(ev.rest_part.real()), num(ev.rest_part.imag())});
    r["alpha"] = num(alpha_decomposition(ev, o.k));
    r["imaginary_residual"] = num(ev.imaginary_residual);
    r["imaginary_flagged"] = ev.imaginary_flagged;
    r["underflow"] = ev.underflow;
    r["min_nonparabolic_distance"] = num(ev.min_nonparabolic_distance);
    r["truncation"] = {{"displacement_bound", num(ev.truncation.displacement_bound)},
                       {"terms_used", ev.truncation.terms_used},
                       {"tail_estimate", num(ev.truncation.tail_estimate)},
                       {"exhaustive", ev.truncation.exhaustive}};
    Sink sink(o.common.out, out);
    if (o.json) {
        *sink << r.dump(2) << "\n";
    } else {
        for (const auto& [key, value] : r.items()) *sink << key << " = " << value.dump() << "\n";
    }
    return ev.truncation.exhaustive ? kPass : kSuiteFailure;
}

// ---------------------------------------------------------------- gram

struct GramOpts {
    Common common;
    std::string forms;
    int k = 0;
    double tol = 1e-8;
    std::string domain = "modular";
};

QuadratureDomain parse_domain(const std::string& spec) {
    if (spec == "modular") return QuadratureDomain::modular();
    if (spec.rfind("strip:", 0) == 0) {
        const auto v = parse_reals(spec.substr(6));
        if (v.size() != 2) throw ConfigError("strip domain is strip:X0,Y0");
        return QuadratureDomain::strip_above(v[0], v[1]);
    }
    throw ConfigError("unknown quadrature domain " + spec);
}

int cmd_gram(const GramOpts& o, std::ostream& out) {
    CuspFormBasis basis = make_basis(read_forms_jsonl(o.forms));
    if (o.k != 0 && o.k != basis.k()) throw ConfigError("--k does not match the weight of the forms file");
    QuadratureOptions q;
    q.tolerance = o.tol;
    const Eigen::MatrixXcd g = petersson_gram(basis, parse_domain(o.domain), q);
    basis.gram = g;
    const CuspFormBasis onb = orthonormal_basis(basis);
    const auto n = g.rows();
    ojson r;
    r["weight"] = basis.weight();
    r["domain"] = o.domain;
    r["labels"] = ojson::array();
    for (const auto& f : basis.forms) r["labels"].push_back(f.label);
    r["gram"] = ojson::array();
    for (Eigen::Index i = 0; i < n; ++i) {
        ojson row = ojson::array();
        for (Eigen::Index j = 0; j < n; ++j) row.push_back(ojson::array({num(g(i, j).real()), num(g(i, j).imag())}));
        r["gram"].push_back(row);
    }
    r["orthonormal_defect"] = num((*onb.gram - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff());
    r["first_coefficient_mass"] = num(first_coefficient_mass(onb).mass);
    Sink sink(o.common.out, out);
    *sink << r.dump(2) << "\n";
    return kPass;
}

// ---------------------------------------------------------------- ratio-scan

struct ScanOpts {
    Common common;
    std::string source = "basis";
    std::string group = "modular";
    std::string forms;
    std::string k;
    std::string grid = "0,1,0.8,6,20,20";
    double cgamma = kDefaultCGamma;
    double bound = 1000.0;
    std::size_t budget = 2000000;
    std::string method = "termwise";
    int monomial_n = 4;
    double injectivity_radius = 0.0;
    std::string summary;
};

DerivativeMethod parse_method(const std::string& m) {
    if (m == "termwise") return DerivativeMethod::SeriesTermwise;
    if (m == "fd" || m == "finite-difference") return DerivativeMethod::FiniteDifference;
    throw ConfigError("unknown derivative method " + m);
}

struct ScanSetup {
    SourceFactory factory;
    std::vector<int> ks;
};

ScanSetup scan_setup(const std::string& source, const std::string& group_name, const std::string& forms,
                     const std::string& k_spec, double bound, std::size_t budget, int monomial_n) {
    ScanSetup s;
    if (source == "basis") {
        auto onb = std::make_shared<CuspFormBasis>(load_orthonormal(forms));
        s.ks = k_spec.empty() ? std::vector<int>{onb->k()} : parse_k_list(k_spec);
        for (int k : s.ks)
            if (k != onb->k()) throw ConfigError("basis source only provides k = " + std::to_string(onb->k()));
        s.factory = [onb](int) { return std::make_unique<BasisKernelSource>(*onb); };
    } else if (source == "poincare") {
        auto group = std::make_shared<FuchsianGroup>(FuchsianGroup::from_name(group_name));
        if (k_spec.empty()) throw ConfigError("poincare source needs --k");
        s.ks = parse_k_list(k_spec);
        s.factory = [group, bound, budget](int k) {
            return std::make_unique<PoincareKernelSource>(*group, k, bound, budget);
        };
    } else if (source == "monomial") {
        if (monomial_n < 1) throw ConfigError("--monomial-n must be positive");
        s.ks = k_spec.empty() ? parse_k_list("2..50") : parse_k_list(k_spec);
        s.factory = [monomial_n](int k) { return std::make_unique<BasisKernelSource>(monomial_model(monomial_n, k)); };
    } else {
        throw ConfigError("unknown source " + source + " (poincare | basis | monomial)");
    }
    return s;
}

ojson summary_json(const ScanSummary& s) {
    return {{"k", s.k},
            {"sup_ratio_over_k2", num(s.sup_ratio_over_k2)},
            {"argmax", point_json(s.argmax)},
            {"limit", num(kRatioLimit)},
            {"kernel_lower", num(s.kernel_lower)},
            {"failures", s.failures},
            {"within_limit", s.within_limit}};
}

int cmd_ratio_scan(const ScanOpts& o, std::ostream& out, std::ostream& err) {
    const ScanSetup setup = scan_setup(o.source, o.group, o.forms, o.k, o.bound, o.budget, o.monomial_n);
    ScanOptions so;
    so.c_gamma = o.cgamma;
    if (o.injectivity_radius > 0.0) so.injectivity_radius = o.injectivity_radius;
    so.method = parse_method(o.method);
    so.threads = o.common.threads;
    const ScanTable t = ratio_scan(setup.factory, setup.ks, ScanGrid::parse(o.grid).points(), so);

    Sink sink(o.common.out, out);
    *sink << "k,x,y,region,ratio,ratio_over_k2,bound,bound_satisfied,route,error\n";
    for (const auto& r : t.rows) {
        if (r.sample) {
            const double k2 = static_cast<double>(r.k) * r.k;
            *sink << fmt::format("{},{},{},{},{},{},{},{},{},\n", r.k, g12(r.z.x()), g12(r.z.y()),
                                 to_string(r.sample->region.tag), g12(r.sample->ratio),
                                 g12(std::abs(r.sample->ratio) / k2), g12(r.bound), r.bound_satisfied ? 1 : 0, r.route);
        } else {
            *sink << fmt::format("{},{},{},,,,,0,{},{}\n", r.k, g12(r.z.x()), g12(r.z.y()), r.route, csv_safe(r.error));
        }
    }
    bool ok = true;
    ojson summaries = ojson::array();
    for (const auto& s : t.summaries) {
        ok = ok && s.within_limit;
        summaries.push_back(summary_json(s));
    }
    if (!o.summary.empty()) {
        Sink ss(o.summary, err);
        *ss << summaries.dump(2) << "\n";
    } else {
        for (const auto& s : t.summaries)
            err << fmt::format("k={} sup|ratio|/k^2={} at ({}, {}) limit={} failures={} {}\n", s.k,
                               g12(s.sup_ratio_over_k2), g12(s.argmax.x()), g12(s.argmax.y()), g12(kRatioLimit),
                               s.failures, s.within_limit ? "ok" : "EXCEEDED");
    }
    return ok ? kPass : kSuiteFailure;
}

// ---------------------------------------------------------------- sym-scan

struct SymOpts {
    Common common;
    std::string forms;
    int k = 0;
    int d = 2;
    std::string tuples = "-0.4,0.4,0.9,2.1,5,5";
    std::string route = "formula";
};

std::vector<std::vector<UhpPoint>> load_tuples(const std::string& spec, int d) {
    if (std::filesystem::exists(spec)) {
        std::ifstream in(spec);
        std::vector<std::vector<UhpPoint>> tuples;
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            std::vector<UhpPoint> t;
            try {
                for (const auto& p : nlohmann::json::parse(line)) t.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("malformed tuple line in " + spec + ": " + e.what());
            }
            if (static_cast<int>(t.size()) != d) throw ConfigError("tuple of the wrong size in " + spec);
            tuples.push_back(std::move(t));
        }
        return tuples;
    }
    if (std::count(spec.begin(), spec.end(), ',') == 5) return product_tuples(ScanGrid::parse(spec).points(), d);
    throw ConfigError("tuples must be a JSON-lines file or a grid spec: " + spec);
}

int cmd_sym_scan(const SymOpts& o, std::ostream& out, std::ostream& err) {
    const CuspFormBasis onb = load_orthonormal(o.forms);
    if (o.k != 0 && o.k != onb.k()) throw ConfigError("--k does not match the weight of the forms file");
    if (o.d < 1) throw ConfigError("--d must be positive");
    if (o.route != "formula" && o.route != "oracle") throw ConfigError("--route is formula or oracle");
    const auto tuples = load_tuples(o.tuples, o.d);
    const bool oracle = o.route == "oracle";
    const VolumeTable t = volume_ratio_scan(
        [&](int, const std::vector<UhpPoint>& z) { return oracle ? fs_form_direct_oracle(onb, z) : fs_form_formula(onb, z); },
        tuples, {onb.k()}, o.common.threads);

    Sink sink(o.common.out, out);
    *sink << "k,points,fs_volume_ratio,ratio_over_k2d,per_factor,cross_term_max,route,status\n";
    for (const auto& r : t.rows) {
        std::string pts;
        for (const auto& p : r.z) pts += (pts.empty() ? "" : ";") + g12(p.x()) + ":" + g12(p.y());
        if (r.sample) {
            std::string pf;
            for (double v : r.sample->per_factor_ratios) pf += (pf.empty() ? "" : ";") + g12(v);
            *sink << fmt::format("{},{},{},{},{},{},{},ok\n", r.k, pts, g12(r.sample->fs_volume_ratio),
                                 g12(r.ratio_over_k2d), pf, g12(r.sample->cross_term_max), r.sample->route);
        } else {
            *sink << fmt::format("{},{},,,,,{},{}\n", r.k, pts, o.route,
                                 csv_safe((r.skipped ? "skipped: " : "error: ") + r.error));
        }
    }
    const VolumeSummary& s = t.summaries.front();
    std::string at;
    for (const auto& p : s.argmax) at += (at.empty() ? "" : " ") + fmt::format("({}, {})", g12(p.x()), g12(p.y()));
    err << fmt::format("k={} d={} sup ratio/k^(2d)={} at {} limit={} failures={} skipped={} {}\n", s.k, s.d,
                       g12(s.sup_ratio_over_k2d), at, g12(s.limit), s.failures, s.skipped,
                       s.within_limit ? "ok" : "EXCEEDED");
    return s.within_limit ? kPass : kSuiteFailure;
}

// ---------------------------------------------------------------- verify

struct VerifyOpts {
    Common common;
    std::string suite;
    std::string group;
    std::string forms;
    std::string k;
    std::string grid;
    std::string source;
    double bound = 1000.0;
    std::size_t budget = 2000000;
    double tol = 0.0;
    int points = 50;
    int instances = 20;
    unsigned seed = 1;
    int monomial_n = 4;
    double cgamma = kDefaultCGamma;
};

struct SuiteResult {
    bool pass = true;
    ojson metrics = ojson::object();
    ojson tolerances = ojson::object();
    std::string failure;

    void fail(const std::string& what) {
        if (pass) failure = what;
        pass = false;
    }
};

double rel_dev(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

SuiteResult suite_kernel_oracle(const VerifyOpts& o) {
    SuiteResult r;
    const double tol = o.tol > 0 ? o.tol : 1e-5;
    r.tolerances["relative"] = num(tol);
    const FuchsianGroup group = FuchsianGroup::from_name(o.group.empty() ? "modular" : o.group);
    std::optional<CuspFormBasis> onb;
    int k = 0;
    if (!o.forms.empty()) {
        onb = load_orthonormal(o.forms);
        k = onb->k();
    }
    if (!o.k.empty()) {
        const auto ks = parse_k_list(o.k);
        if (onb && ks.front() != k) throw ConfigError("--k does not match the weight of the forms file");
        k = ks.front();
    }
    if (k == 0) k = 6;
    const bool trivial = group.generators.empty();
    const bool translations = !trivial && std::all_of(group.generators.begin(), group.generators.end(),
                                                      [](const MoebiusTransform& g) { return g.fixes_cusp(); });
    if (!trivial && !translations && !onb) throw ConfigError("kernel-oracle for group " + group.label + " needs --forms");

    const std::vector<UhpPoint> pts{{0.0, 1.0}, {0.5, std::sqrt(3.0) / 2.0}};
    r.metrics["group"] = group.label;
    r.metrics["k"] = k;
    r.metrics["oracle"] = trivial ? "identity term" : translations ? "translation sum" : "basis kernel";
    r.metrics["points"] = ojson::array();
    double worst = 0.0;
    for (const auto& z : pts) {
        const KernelEvaluation ev = bergman_kernel_diagonal(group, z, k, o.bound, o.budget);
        double oracle;
        if (trivial) {
            oracle = identity_term(k);
        } else if (translations) {
            CompensatedSum s;
            for (const auto& g : stabilizer_elements(-1000, 1000)) s.add(poincare_term(g, z, k).scaled(0.0).real());
            oracle = s.value();
        } else {
            oracle = bergman_from_basis(*onb, z);
        }
        const double dev = rel_dev(ev.value_diagonal, oracle);
        worst = std::max(worst, dev);
        r.metrics["points"].push_back({{"z", point_json(z)},
                                       {"series", num(ev.value_diagonal)},
                                       {"oracle", num(oracle)},
                                       {"relative_deviation", num(dev)},
                                       {"tail_estimate", num(ev.truncation.tail_estimate)},
                                       {"terms_used", ev.truncation.terms_used}});
        if (!ev.truncation.exhaustive) r.fail("enumeration not exhaustive at " + g12(z.x()) + "," + g12(z.y()));
        if (!(ev.truncation.tail_estimate <= tol * oracle)) r.fail("tail estimate above tolerance");
        if (!(dev <= tol)) r.fail("series and oracle differ at " + g12(z.x()) + "," + g12(z.y()));
    }
    r.metrics["max_relative_deviation"] = num(worst);
    return r;
}

SuiteResult suite_lemma4(const VerifyOpts& o) {
    SuiteResult r;
    const double tol = o.tol > 0 ? o.tol : 1e-5;
    r.tolerances["relative"] = num(tol);
    const CuspFormBasis onb = load_orthonormal(o.forms);
    if (!o.k.empty() && parse_k_list(o.k).front() != onb.k())
        throw ConfigError("--k does not match the weight of the forms file");
    const auto grid = ScanGrid::parse(o.grid.empty() ? "-0.45,0.45,0.9,2.0,10,10" : o.grid).points();
    std::vector<std::unique_ptr<KernelSource>> sources;
    sources.push_back(std::make_unique<BasisKernelSource>(onb));
    if (!o.group.empty()) sources.push_back(std::make_unique<PoincareKernelSource>(FuchsianGroup::from_name(o.group), onb.k(), o.bound, o.budget));

    r.metrics["k"] = onb.k();
    r.metrics["grid_points"] = grid.size();
    std::vector<std::vector<double>> termwise(sources.size(), std::vector<double>(grid.size()));
    for (std::size_t s = 0; s < sources.size(); ++s) {
        std::vector<double> dev(grid.size());
        std::vector<std::string> errors(grid.size());
        parallel_for(grid.size(), o.common.threads, [&](std::size_t i) {
            try {
                const auto local = sources[s]->localize(grid[i]);
                const double a = bergman_metric_ratio(kernel_derivatives(*local, onb.k(), grid[i], DerivativeMethod::SeriesTermwise)).ratio;
                const double b = bergman_metric_ratio(kernel_derivatives(*local, onb.k(), grid[i], DerivativeMethod::FiniteDifference)).ratio;
                termwise[s][i] = a;
                dev[i] = rel_dev(b, a);
            } catch (const Error& e) {
                errors[i] = e.what();
            }
        });
        double worst = 0.0;
        std::size_t at = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!errors[i].empty()) {
                r.fail(sources[s]->route() + " route failed at " + g12(grid[i].x()) + "," + g12(grid[i].y()) + ": " + errors[i]);
                continue;
            }
            if (dev[i] > worst) worst = dev[i], at = i;
        }
        r.metrics[sources[s]->route()] = {{"max_relative_deviation", num(worst)}, {"worst_point", point_json(grid[at])}};
        if (!(worst <= tol)) r.fail(sources[s]->route() + " route: termwise and finite-difference ratios differ at " +
                                    g12(grid[at].x()) + "," + g12(grid[at].y()));
    }
    if (sources.size() == 2) {
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, rel_dev(termwise[1][i], termwise[0][i]));
        r.metrics["cross_route_max_relative_deviation"] = num(worst);
    }
    return r;
}

SuiteResult suite_prop3(const VerifyOpts& o) {
    SuiteResult r;
    const FuchsianGroup group = FuchsianGroup::from_name(o.group.empty() ? "translations" : o.group);
    const auto ks = parse_k_list(o.k.empty() ? "3,6,10" : o.k);
    std::mt19937 rng(o.seed);
    std::uniform_real_distribution<double> ux(0.0, 1.0), uy(0.5, 3.0);
    std::vector<UhpPoint> pts;
    for (int i = 0; i < o.points; ++i) {
        const double x = ux(rng);
        pts.emplace_back(x, uy(rng));
    }
    const double r_hat = injectivity_radius_estimate(group, pts, o.budget);
    r.metrics["group"] = group.label;
    r.metrics["injectivity_radius_estimate"] = num(r_hat);
    r.metrics["points"] = pts.size();
    r.metrics["per_k"] = ojson::array();
    for (int k : ks) {
        if (k < 3) throw ConfigError("prop3 suite needs k >= 3");
        const double cx = r_hat > 0.0 ? cx_constant(r_hat, k).value : INFINITY;
        std::vector<double> alpha(pts.size()), bound(pts.size());
        std::vector<std::string> errors(pts.size());
        parallel_for(pts.size(), o.common.threads, [&](std::size_t i) {
            try {
                const KernelEvaluation ev = bergman_kernel_diagonal(group, pts[i], k, o.bound, o.budget);
                if (!ev.truncation.exhaustive) throw BudgetExceeded("enumeration not exhaustive");
                alpha[i] = alpha_decomposition(ev, k);
                bound[i] = parabolic_term_bound(pts[i].y(), k) + cx;
            } catch (const Error& e) {
                errors[i] = e.what();
            }
        });
        double worst = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (!errors[i].empty()) {
                r.fail("evaluation failed at " + g12(pts[i].x()) + "," + g12(pts[i].y()) + ": " + errors[i]);
                continue;
            }
            worst = std::max(worst, std::abs(alpha[i]) / bound[i]);
            if (!(std::abs(alpha[i]) <= bound[i]))
                r.fail("|alpha| exceeds the bound at k=" + std::to_string(k) + ", z=" + g12(pts[i].x()) + "," + g12(pts[i].y()));
        }
        r.metrics["per_k"].push_back({{"k", k}, {"c_x", num(cx)}, {"max_alpha_over_bound", num(worst)}});
    }
    return r;
}

SuiteResult suite_prop9(const VerifyOpts& o) {
    SuiteResult r;
    const CuspFormBasis onb = load_orthonormal(o.forms);
    const auto heights = parse_reals(o.grid.empty() ? "4,6,8" : o.grid);
    const double slack = 2.0;
    const double route_tol = o.tol > 0 ? o.tol : 1e-4;
    r.tolerances["predictive_factor"] = num(slack);
    r.tolerances["route_agreement"] = num(route_tol);
    const DecayFit fit = fit_cusp_decay(onb, 0.0, heights);
    const bool collapsed = std::all_of(fit.beta.begin(), fit.beta.end(), [](double b) { return b == 0.0; });
    r.metrics["k"] = onb.k();
    r.metrics["forms"] = onb.size();
    r.metrics["heights"] = heights;
    ojson betas = ojson::array(), normalized = ojson::array();
    for (std::size_t i = 0; i < heights.size(); ++i) {
        betas.push_back(num(fit.beta[i]));
        normalized.push_back(num(fit.normalized[i]));
    }
    r.metrics["abs_beta"] = betas;
    r.metrics["normalized"] = normalized;
    r.metrics["K"] = num(fit.K);
    r.metrics["collapsed"] = collapsed;
    r.metrics["decreasing"] = fit.decreasing;
    if (!collapsed) {
        if (!fit.decreasing) r.fail("|beta| is not decreasing in y");
        for (std::size_t i = 1; i < heights.size(); ++i)
            if (!(fit.normalized[i] <= slack * fit.normalized[0]))
                r.fail("K fitted at the lowest height does not bound y=" + g12(heights[i]));
    }
    double worst = 0.0;
    const BasisKernelSource source(onb);
    for (double y : heights) {
        const UhpPoint z(0.0, y);
        const double a = cusp_ratio_expansion(onb, z).sample.ratio;
        const double b = bergman_metric_ratio(kernel_derivatives(source, z, DerivativeMethod::SeriesTermwise)).ratio;
        worst = std::max(worst, rel_dev(a, b));
    }
    r.metrics["route_max_relative_deviation"] = num(worst);
    if (!(worst <= route_tol)) r.fail("cusp expansion and basis route disagree");
    return r;
}

SuiteResult suite_thm10(const VerifyOpts& o) {
    SuiteResult r;
    const std::string source = !o.source.empty() ? o.source : (o.forms.empty() ? "monomial" : "basis");
    const ScanSetup setup = scan_setup(source, o.group.empty() ? "modular" : o.group, o.forms, o.k, o.bound, o.budget, o.monomial_n);
    ScanOptions so;
    so.c_gamma = o.cgamma;
    so.threads = o.common.threads;
    const ScanTable t = ratio_scan(setup.factory, setup.ks, ScanGrid::parse(o.grid.empty() ? "0,1,0.8,6,20,20" : o.grid).points(), so);
    r.tolerances["limit"] = num(kRatioLimit);
    r.metrics["source"] = source;
    r.metrics["per_k"] = ojson::array();
    double worst = 0.0;
    for (const auto& s : t.summaries) {
        r.metrics["per_k"].push_back(summary_json(s));
        worst = std::max(worst, s.sup_ratio_over_k2);
        if (!s.within_limit)
            r.fail("k=" + std::to_string(s.k) + ": sup |ratio|/k^2 = " + g12(s.sup_ratio_over_k2) + " at (" +
                   g12(s.argmax.x()) + ", " + g12(s.argmax.y()) + ")" +
                   (s.failures ? ", " + std::to_string(s.failures) + " failed points" : ""));
    }
    r.metrics["sup_over_all_k"] = num(worst);
    return r;
}

SuiteResult suite_sym(const VerifyOpts& o) {
    SuiteResult r;
    const double tol = o.tol > 0 ? o.tol : 1e-3;
    const double sep_tol = 1e-8;
    r.tolerances["two_route_relative"] = num(tol);
    r.tolerances["separable_relative"] = num(sep_tol);

    // two-route agreement on random synthetic families
    std::mt19937 rng(o.seed);
    std::uniform_real_distribution<double> ux(-0.5, 0.5), uy(0.3, 1.0);
    std::uniform_int_distribution<int> un(3, 8);
    struct Instance {
        int n, d;
        unsigned seed;
        std::vector<UhpPoint> z;
    };
    std::vector<Instance> inst;
    for (int i = 0; i < o.instances; ++i) {
        Instance in{un(rng), 1 + i % 2, o.seed * 1000u + static_cast<unsigned>(i), {}};
        for (int j = 0; j < in.d; ++j) {
            const double x = ux(rng);
            in.z.emplace_back(x, uy(rng));
        }
        inst.push_back(std::move(in));
    }
    std::vector<double> dev(inst.size());
    std::vector<std::string> errors(inst.size());
    parallel_for(inst.size(), o.common.threads, [&](std::size_t i) {
        try {
            const CuspFormBasis b = random_synthetic_basis(inst[i].n, 6, inst[i].n + 2, inst[i].seed);
            dev[i] = rel_dev(fs_form_formula(b, inst[i].z).fs_volume_ratio, fs_form_direct_oracle(b, inst[i].z).fs_volume_ratio);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    double worst = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i) {
        if (!errors[i].empty()) r.fail("instance " + std::to_string(i) + ": " + errors[i]);
        worst = std::max(worst, dev[i]);
    }
    r.metrics["instances"] = inst.size();
    r.metrics["two_route_max_relative_deviation"] = num(worst);
    if (!(worst <= tol)) r.fail("formula and Grassmannian oracle disagree");

    // separable product model
    const int k = 6;
    const CuspFormBasis slot = monomial_model(3, k);
    const auto pts = ScanGrid::parse("-0.4,0.4,0.6,1.6,5,5").points();
    const VolumeTable one = volume_ratio_scan(
        [&](int, const std::vector<UhpPoint>& z) { return fs_form_formula(SeparableModel{{slot}}, z); },
        product_tuples(pts, 1), {k}, o.common.threads);
    const VolumeTable two = volume_ratio_scan(
        [&](int, const std::vector<UhpPoint>& z) { return fs_form_formula(SeparableModel{{slot, slot}}, z); },
        product_tuples(pts, 2), {k}, o.common.threads);
    const double expected = std::pow(one.summaries[0].sup_ratio_over_k2d, 2);
    const double sep_dev = rel_dev(two.summaries[0].sup_ratio_over_k2d, expected);
    r.metrics["separable_sup"] = num(two.summaries[0].sup_ratio_over_k2d);
    r.metrics["separable_expected"] = num(expected);
    r.metrics["separable_relative_deviation"] = num(sep_dev);
    if (!(sep_dev <= sep_tol)) r.fail("separable model does not factor");

    if (!o.forms.empty()) {
        const CuspFormBasis onb = load_orthonormal(o.forms);
        const auto tuples = product_tuples(ScanGrid::parse(o.grid.empty() ? "-0.4,0.4,0.9,2.1,5,5" : o.grid).points(), 2);
        const VolumeTable t = volume_ratio_scan(
            [&](int, const std::vector<UhpPoint>& z) { return fs_form_formula(onb, z); }, tuples, {onb.k()},
            o.common.threads);
        const VolumeSummary& s = t.summaries[0];
        r.metrics["basis_scan"] = {{"k", s.k},
                                   {"d", s.d},
                                   {"sup_ratio_over_k2d", num(s.sup_ratio_over_k2d)},
                                   {"limit", num(s.limit)},
                                   {"failures", s.failures},
                                   {"skipped_near_diagonal", s.skipped}};
        if (!s.within_limit) r.fail("basis d=2 scan exceeds (26/pi)^2 or has failures");
    }
    return r;
}

int cmd_verify(const VerifyOpts& o, std::ostream& out) {
    static const std::map<std::string, SuiteResult (*)(const VerifyOpts&)> suites{
        {"kernel-oracle", suite_kernel_oracle}, {"lemma4", suite_lemma4}, {"prop3", suite_prop3},
        {"prop9", suite_prop9},                 {"thm10", suite_thm10},   {"sym", suite_sym}};
    const auto it = suites.find(o.suite);
    if (it == suites.end()) throw ConfigError("unknown suite " + o.suite);
    const SuiteResult res = it->second(o);
    ojson report;
    report["suite"] = o.suite;
    report["pass"] = res.pass;
    report["metrics"] = res.metrics;
    report["tolerances"] = res.tolerances;
    if (!res.pass) report["failure"] = res.failure;
    Sink sink(o.common.out, out);
    *sink << report.dump(2) << "\n";
    return res.pass ? kPass : kSuiteFailure;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bergman kernels of cusp-form spaces on hyperbolic surfaces", "bergman"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);

    IngestOpts ingest;
    auto* c_ingest = app.add_subcommand("ingest", "read and validate q-expansion files");
    add_common(c_ingest, ingest.common);
    c_ingest->add_option("--forms", ingest.forms, "JSON-lines forms file")->required();
    c_ingest->add_option("--group", ingest.group, "group for the modularity check");
    c_ingest->add_flag("--validate", ingest.validate, "check modularity under the group generators");
    c_ingest->add_option("--tol", ingest.tol, "modularity defect tolerance");

    KernelOpts kernel;
    auto* c_kernel = app.add_subcommand("kernel", "evaluate the Poincare-series kernel at a point");
    add_common(c_kernel, kernel.common);
    c_kernel->add_option("--group", kernel.group, "modular | free2 | translations | trivial | file:<path>");
    c_kernel->add_option("--k", kernel.k, "half weight")->check(CLI::Range(2, 1000));
    c_kernel->add_option("--z", kernel.z, "point \"x,y\"");
    c_kernel->add_option("--bound", kernel.bound, "cosh^2 displacement bound");
    c_kernel->add_option("--budget", kernel.budget, "enumeration budget");
    c_kernel->add_flag("--json", kernel.json, "JSON output");

    GramOpts gram;
    auto* c_gram = app.add_subcommand("gram", "Petersson Gram matrix by quadrature");
    add_common(c_gram, gram.common);
    c_gram->add_option("--forms", gram.forms, "JSON-lines forms file")->required();
    c_gram->add_option("--k", gram.k, "expected half weight");
    c_gram->add_option("--tol", gram.tol, "refinement tolerance");
    c_gram->add_option("--domain", gram.domain, "modular | strip:X0,Y0");

    ScanOpts scan;
    auto* c_scan = app.add_subcommand("ratio-scan", "Bergman/hyperbolic ratio over a grid");
    add_common(c_scan, scan.common);
    c_scan->add_option("--source", scan.source, "poincare | basis | monomial");
    c_scan->add_option("--group", scan.group, "group for the poincare source");
    c_scan->add_option("--forms", scan.forms, "forms file for the basis source");
    c_scan->add_option("--k", scan.k, "k list, e.g. 6 or 2..50 or 3,6,10");
    c_scan->add_option("--grid", scan.grid, "X0,X1,Y0,Y1,NX,NY");
    c_scan->add_option("--cgamma", scan.cgamma, "region constant c_gamma");
    c_scan->add_option("--bound", scan.bound, "cosh^2 displacement bound (poincare)");
    c_scan->add_option("--budget", scan.budget, "enumeration budget (poincare)");
    c_scan->add_option("--method", scan.method, "termwise | fd");
    c_scan->add_option("--monomial-n", scan.monomial_n, "forms in the monomial model");
    c_scan->add_option("--injectivity-radius", scan.injectivity_radius, "r_X for the compact-part bound");
    c_scan->add_option("--summary", scan.summary, "JSON summary path (default: text on stderr)");

    SymOpts sym;
    auto* c_sym = app.add_subcommand("sym-scan", "Fubini-Study volume ratio over tuples of points");
    add_common(c_sym, sym.common);
    c_sym->add_option("--forms", sym.forms, "JSON-lines forms file")->required();
    c_sym->add_option("--k", sym.k, "expected half weight");
    c_sym->add_option("--d", sym.d, "points per tuple");
    c_sym->add_option("--tuples", sym.tuples, "JSON-lines tuple file or grid spec X0,X1,Y0,Y1,NX,NY");
    c_sym->add_option("--route", sym.route, "formula | oracle");

    VerifyOpts verify;
    auto* c_verify = app.add_subcommand("verify", "run a verification suite");
    add_common(c_verify, verify.common);
    c_verify->add_option("--suite", verify.suite, "kernel-oracle | lemma4 | prop3 | prop9 | thm10 | sym")->required();
    c_verify->add_option("--group", verify.group, "group preset");
    c_verify->add_option("--forms", verify.forms, "JSON-lines forms file");
    c_verify->add_option("--k", verify.k, "k or k list");
    c_verify->add_option("--grid", verify.grid, "grid spec (heights list for prop9)");
    c_verify->add_option("--source", verify.source, "thm10 source");
    c_verify->add_option("--bound", verify.bound, "cosh^2 displacement bound");
    c_verify->add_option("--budget", verify.budget, "enumeration budget");
    c_verify->add_option("--tol", verify.tol, "suite tolerance override");
    c_verify->add_option("--points", verify.points, "random points (prop3)");
    c_verify->add_option("--instances", verify.instances, "random instances (sym)");
    c_verify->add_option("--seed", verify.seed, "random seed");
    c_verify->add_option("--monomial-n", verify.monomial_n, "forms in the monomial model");
    c_verify->add_option("--cgamma", verify.cgamma, "region constant c_gamma");

    try {
        args = expand_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kPass;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kPass;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (c_ingest->parsed()) return cmd_ingest(ingest, out);
        if (c_kernel->parsed()) return cmd_kernel(kernel, out);
        if (c_gram->parsed()) return cmd_gram(gram, out);
        if (c_scan->parsed()) return cmd_ratio_scan(scan, out, err);
        if (c_sym->parsed()) return cmd_sym_scan(sym, out, err);
        if (c_verify->parsed()) return cmd_verify(verify, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const Error& e) {
        err << "failure: " << e.what() << "\n";
        return kSuiteFailure;
    }
    return kConfigError;
}

}  // namespace bergman::cli
