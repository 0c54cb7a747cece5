#include "hetgrad/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

namespace hetgrad {

using nlohmann::json;

namespace {

// Tracks which keys of an object were consumed so leftovers can be reported.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("config key '" + name() + "' must be an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& at(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_number()) throw ConfigError("config key '" + full(key) + "' must be a number");
        return v.get<double>();
    }

    long long integer(const std::string& key, long long fallback) {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_number_integer()) throw ConfigError("config key '" + full(key) + "' must be an integer");
        return v.get<long long>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_string()) throw ConfigError("config key '" + full(key) + "' must be a string");
        return v.get<std::string>();
    }

    Section sub(const std::string& key) { return Section(at(key), full(key)); }

    std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError("unknown config key '" + full(it.key()) + "'");
    }

private:
    std::string name() const { return path_.empty() ? "<root>" : path_; }
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

template <class Fn>
auto convert(const std::string& key, Fn fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError("config key '" + key + "' " + what);
}

FieldSpec parse_field(Section& parent, const std::string& key, const FieldSpec& fallback) {
    if (!parent.has(key)) return fallback;
    const json& v = parent.at(key);
    FieldSpec f;
    if (v.is_number()) {
        f.constant = v.get<double>();
        return f;
    }
    if (v.is_string()) {
        require(v.get<std::string>() == "identity", parent.full(key), "accepts only the string \"identity\"");
        f.identity = true;
        return f;
    }
    Section s(v, parent.full(key));
    f.constant = s.number("constant", 0.0);
    f.amplitude = s.number("amplitude", 0.0);
    f.frequency = s.number("frequency", 1.0);
    s.finish();
    return f;
}

json field_json(const FieldSpec& f) {
    if (f.identity) return "identity";
    return {{"constant", f.constant}, {"amplitude", f.amplitude}, {"frequency", f.frequency}};
}

}  // namespace

Domain DomainConfig::make() const {
    if (type == "interval") {
        if (bounds.size() != 2) throw ConfigError("config key 'domain.bounds' needs 2 entries for an interval");
        return Domain::interval(bounds[0], bounds[1]);
    }
    if (type == "rectangle") {
        if (bounds.size() != 4) throw ConfigError("config key 'domain.bounds' needs 4 entries for a rectangle");
        return Domain::rectangle(bounds[0], bounds[1], bounds[2], bounds[3]);
    }
    throw ConfigError("config key 'domain.type' must be \"interval\" or \"rectangle\"");
}

KernelSpec RunConfig::kernel_spec() const {
    return build_kernel(kernel.family, dim(), kernel.s, Cutoff::bump, kernel.kappa, kernel.epsilon_H);
}

AssemblyOptions RunConfig::assembly() const {
    AssemblyOptions o;
    o.rays_min = solver.rays_min;
    o.rays_per_h = solver.rays_per_h;
    o.threads = solver.threads;
    return o;
}

json RunConfig::to_json() const {
    json k = {{"family", to_string(kernel.family)}, {"s", kernel.s}, {"epsilon_H", kernel.epsilon_H}};
    if (!std::isnan(kernel.kappa)) k["kappa"] = kernel.kappa;
    json faces = json::array();
    for (Face f : problem.gamma) faces.push_back(to_string(f));
    return {
        {"version", version},
        {"kernel", k},
        {"domain", {{"type", domain.type}, {"bounds", domain.bounds}}},
        {"N", N},
        {"horizon", {{"delta_bar", horizon.delta_bar}, {"profile", to_string(horizon.profile)}, {"gamma", horizon.gamma}}},
        {"problem",
         {{"density", to_string(problem.density)},
          {"p", problem.p},
          {"alpha", problem.alpha},
          {"beta", problem.beta},
          {"bc", to_string(problem.bc)},
          {"gamma", faces},
          {"load", field_json(problem.load)},
          {"dirichlet", field_json(problem.dirichlet)},
          {"flux", field_json(problem.flux)}}},
        {"solver",
         {{"rtol", solver.rtol},
          {"grad_tol", solver.grad_tol},
          {"max_iter", solver.max_iter},
          {"seed", solver.seed},
          {"budget", solver.budget},
          {"threads", solver.threads},
          {"rays_min", solver.rays_min},
          {"rays_per_h", solver.rays_per_h}}},
        {"jump", {{"s", jump.s}, {"p", jump.p}}},
        {"output", {{"dir", output.dir}}},
    };
}

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config(const json& j) {
    RunConfig c;
    Section root(j, "");
    require(root.has("version"), "version", "is required");
    c.version = static_cast<int>(root.integer("version", 0));
    require(c.version == kConfigVersion, "version", "must be " + std::to_string(kConfigVersion));

    if (root.has("kernel")) {
        Section k = root.sub("kernel");
        c.kernel.family = convert("kernel.family", [&] { return family_from_string(k.string("family", "fractional")); });
        c.kernel.s = k.number("s", c.kernel.s);
        c.kernel.kappa = k.number("kappa", c.kernel.kappa);
        c.kernel.epsilon_H = k.number("epsilon_H", c.kernel.epsilon_H);
        k.finish();
    }
    require(c.kernel.s > 0.0 && c.kernel.s < 1.0, "kernel.s", "must lie in (0,1)");
    require(c.kernel.epsilon_H > 0.0 && c.kernel.epsilon_H <= 1.0, "kernel.epsilon_H", "must lie in (0,1]");

    if (root.has("domain")) {
        Section d = root.sub("domain");
        c.domain.type = d.string("type", c.domain.type);
        if (d.has("bounds")) {
            const json& b = d.at("bounds");
            require(b.is_array() && std::all_of(b.begin(), b.end(), [](const json& x) { return x.is_number(); }),
                    "domain.bounds", "must be an array of numbers");
            c.domain.bounds = b.get<std::vector<double>>();
        } else if (c.domain.type == "rectangle") {
            c.domain.bounds = {0.0, 1.0, 0.0, 1.0};
        }
        d.finish();
    }
    try {
        c.domain.make();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config key 'domain.bounds': ") + e.what());
    }

    c.N = static_cast<int>(root.integer("N", c.N));
    require(c.N >= 4, "N", "must be at least 4");

    if (root.has("horizon")) {
        Section h = root.sub("horizon");
        c.horizon.delta_bar = h.number("delta_bar", c.horizon.delta_bar);
        c.horizon.profile =
            convert("horizon.profile", [&] { return horizon_profile_from_string(h.string("profile", "exponential")); });
        c.horizon.gamma = h.number("gamma", c.horizon.gamma);
        h.finish();
    }
    require(c.horizon.delta_bar > 0.0, "horizon.delta_bar", "must be positive");
    require(c.horizon.gamma > 0.0 && c.horizon.gamma < 1.0, "horizon.gamma", "must lie in (0,1)");

    if (root.has("problem")) {
        Section p = root.sub("problem");
        c.problem.density = convert("problem.density", [&] { return density_from_string(p.string("density", "quadratic")); });
        c.problem.p = p.number("p", c.problem.p);
        c.problem.alpha = p.number("alpha", c.problem.alpha);
        c.problem.beta = p.number("beta", c.problem.beta);
        c.problem.bc = convert("problem.bc", [&] { return constraint_from_string(p.string("bc", "mixed")); });
        if (p.has("gamma")) {
            const json& g = p.at("gamma");
            require(g.is_array(), "problem.gamma", "must be an array of face names");
            c.problem.gamma.clear();
            for (const auto& f : g) {
                require(f.is_string(), "problem.gamma", "must be an array of face names");
                c.problem.gamma.push_back(convert("problem.gamma", [&] { return face_from_string(f.get<std::string>()); }));
            }
        }
        c.problem.load = parse_field(p, "load", c.problem.load);
        c.problem.dirichlet = parse_field(p, "dirichlet", c.problem.dirichlet);
        c.problem.flux = parse_field(p, "flux", c.problem.flux);
        p.finish();
    }
    require(c.problem.p > 1.0, "problem.p", "must exceed 1");
    for (Face f : c.problem.gamma)
        require(c.dim() == 2 || f == Face::left || f == Face::right, "problem.gamma", "names a face the domain lacks");

    if (root.has("solver")) {
        Section s = root.sub("solver");
        c.solver.rtol = s.number("rtol", c.solver.rtol);
        c.solver.grad_tol = s.number("grad_tol", c.solver.grad_tol);
        c.solver.max_iter = static_cast<int>(s.integer("max_iter", c.solver.max_iter));
        c.solver.seed = static_cast<std::uint64_t>(s.integer("seed", static_cast<long long>(c.solver.seed)));
        c.solver.budget = static_cast<int>(s.integer("budget", c.solver.budget));
        c.solver.threads = static_cast<int>(s.integer("threads", c.solver.threads));
        c.solver.rays_min = static_cast<int>(s.integer("rays_min", c.solver.rays_min));
        c.solver.rays_per_h = s.number("rays_per_h", c.solver.rays_per_h);
        s.finish();
    }
    require(c.solver.rtol > 0.0, "solver.rtol", "must be positive");
    require(c.solver.grad_tol > 0.0, "solver.grad_tol", "must be positive");
    require(c.solver.max_iter > 0, "solver.max_iter", "must be positive");
    require(c.solver.budget > 0, "solver.budget", "must be positive");
    require(c.solver.threads >= 0, "solver.threads", "must be nonnegative");
    require(c.solver.rays_min >= 4, "solver.rays_min", "must be at least 4");
    require(c.solver.rays_per_h > 0.0, "solver.rays_per_h", "must be positive");

    if (root.has("jump")) {
        Section s = root.sub("jump");
        c.jump.s = s.number("s", c.jump.s);
        c.jump.p = s.number("p", c.jump.p);
        s.finish();
    }
    require(c.jump.s > 0.0 && c.jump.s < 1.0, "jump.s", "must lie in (0,1)");
    require(c.jump.p > 1.0, "jump.p", "must exceed 1");

    if (root.has("output")) {
        Section o = root.sub("output");
        c.output.dir = o.string("dir", c.output.dir);
        o.finish();
    }
    root.finish();

    try {
        c.kernel_spec();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config key 'kernel': ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

double eval_field(const FieldSpec& f, const Domain& d, double x, double y) {
    if (f.identity) return x;
    double v = f.amplitude;
    if (v != 0.0) {
        v *= std::sin(f.frequency * std::numbers::pi * (x - d.lo[0]) / (d.hi[0] - d.lo[0]));
        if (d.n == 2) v *= std::sin(f.frequency * std::numbers::pi * (y - d.lo[1]) / (d.hi[1] - d.lo[1]));
    }
    return f.constant + v;
}

Setup make_setup(const RunConfig& cfg, int N) {
    return make_setup(cfg, N, std::make_shared<const KernelProfiles>(cfg.kernel_spec()));
}

Setup make_setup(const RunConfig& cfg, int N, std::shared_ptr<const KernelProfiles> profiles) {
    Setup s;
    const Domain dom = cfg.domain.make();
    s.grid = std::make_shared<const Grid>(dom, N);
    s.profiles = std::move(profiles);
    s.horizon = std::make_shared<const HorizonFunction>(dom, cfg.horizon.delta_bar, cfg.horizon.profile, cfg.horizon.gamma);
    s.options = cfg.assembly();
    s.disc = std::make_shared<const Discretization>(Discretization::build(s.grid, s.profiles, s.horizon, s.options));
    return s;
}

}  // namespace hetgrad
