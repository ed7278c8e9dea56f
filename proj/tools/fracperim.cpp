// fracperim: grid rasterization, nonlocal energies, sweeps, and the
// property suite behind one subcommand-style binary.
//
// Exit codes: 0 ok, 2 configuration, 3 I/O, 4 divergent parameters,
// 5 verdict failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "fracperim/energy.hpp"
#include "fracperim/grid.hpp"
#include "fracperim/harness.hpp"
#include "fracperim/kernel.hpp"
#include "fracperim/rearrange.hpp"
#include "fracperim/tv.hpp"

namespace {

using nlohmann::json;

// ---- shape spec strings ----
//
// Grammar (whitespace-free):
//   ball(cx,cy,cz,r)
//   box(lx,ly,lz,hx,hy,hz)
//   annulus(cx,cy,cz,rin,rout)
//   union(shape;shape;...)            intersect(shape;shape;...)
//   translate(shape;dx,dy,dz)
//   complement(shape;lx,ly,lz,hx,hy,hz)

std::vector<std::string> split_top(const std::string& s, char sep) {
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(')
            ++depth;
        if (c == ')')
            --depth;
        if (c == sep && depth == 0) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

std::vector<double> parse_numbers(const std::string& s, std::size_t want,
                                  const std::string& ctx) {
    const auto parts = split_top(s, ',');
    if (parts.size() != want)
        throw fp::ConfigError("shape spec: " + ctx + " wants " +
                              std::to_string(want) + " numbers, got '" + s +
                              "'");
    std::vector<double> out;
    for (const auto& p : parts) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(p, &pos));
            if (pos != p.size())
                throw std::invalid_argument(p);
        } catch (const std::exception&) {
            throw fp::ConfigError("shape spec: bad number '" + p + "' in " +
                                  ctx);
        }
    }
    return out;
}

fp::ShapeSpec parse_shape(const std::string& spec) {
    const auto open = spec.find('(');
    if (open == std::string::npos || spec.back() != ')')
        throw fp::ConfigError("shape spec: expected name(...), got '" + spec +
                              "'");
    const std::string name = spec.substr(0, open);
    const std::string body = spec.substr(open + 1, spec.size() - open - 2);
    if (name == "ball") {
        const auto v = parse_numbers(body, 4, "ball");
        return fp::ShapeSpec::ball({v[0], v[1], v[2]}, v[3]);
    }
    if (name == "box") {
        const auto v = parse_numbers(body, 6, "box");
        return fp::ShapeSpec::box({v[0], v[1], v[2]}, {v[3], v[4], v[5]});
    }
    if (name == "annulus") {
        const auto v = parse_numbers(body, 5, "annulus");
        return fp::ShapeSpec::annulus({v[0], v[1], v[2]}, v[3], v[4]);
    }
    if (name == "union" || name == "intersect") {
        std::vector<fp::ShapeSpec> parts;
        for (const auto& p : split_top(body, ';'))
            parts.push_back(parse_shape(p));
        return name == "union" ? fp::ShapeSpec::unite(std::move(parts))
                               : fp::ShapeSpec::intersect(std::move(parts));
    }
    if (name == "translate") {
        const auto parts = split_top(body, ';');
        if (parts.size() != 2)
            throw fp::ConfigError("shape spec: translate(shape;dx,dy,dz)");
        const auto v = parse_numbers(parts[1], 3, "translate");
        return fp::ShapeSpec::translate(parse_shape(parts[0]),
                                        {v[0], v[1], v[2]});
    }
    if (name == "complement") {
        const auto parts = split_top(body, ';');
        if (parts.size() != 2)
            throw fp::ConfigError(
                "shape spec: complement(shape;lx,ly,lz,hx,hy,hz)");
        const auto v = parse_numbers(parts[1], 6, "complement");
        fp::BoxShape box;
        box.low = {v[0], v[1], v[2]};
        box.high = {v[3], v[4], v[5]};
        return fp::ShapeSpec::complement_within(parse_shape(parts[0]), box);
    }
    throw fp::ConfigError("shape spec: unknown shape '" + name + "'");
}

// flat key=value config files; '#' starts a comment line
std::vector<std::string> config_file_args(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw fp::IoError("cannot open config file: " + path);
    std::vector<std::string> args;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos)
            continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw fp::ConfigError("config file: expected key=value, got '" +
                                  line + "'");
        args.push_back("--" + line.substr(0, eq));
        args.push_back(line.substr(eq + 1));
    }
    return args;
}

std::vector<double> parse_grid_list(const std::string& csv,
                                    const std::string& ctx) {
    std::vector<double> out;
    for (const auto& p : split_top(csv, ',')) {
        if (p == "inf") {
            out.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        try {
            out.push_back(std::stod(p));
        } catch (const std::exception&) {
            throw fp::ConfigError("bad number '" + p + "' in " + ctx);
        }
    }
    return out;
}

fp::RenormMode parse_renorm(const std::string& s) {
    if (s == "analytic")
        return fp::RenormMode::AnalyticGamma;
    if (s == "discrete")
        return fp::RenormMode::DiscreteGamma;
    if (s == "none")
        return fp::RenormMode::None;
    throw fp::ConfigError("renorm must be analytic|discrete|none, got '" + s +
                          "'");
}

fp::Engine parse_engine(const std::string& s) {
    if (s == "direct")
        return fp::Engine::Direct;
    if (s == "conv")
        return fp::Engine::Convolution;
    throw fp::ConfigError("engine must be direct|conv, got '" + s + "'");
}

// "R=2.5", "R=inf", "r=0.5"
std::pair<char, double> parse_window(const std::string& s) {
    if (s.size() < 3 || s[1] != '=' || (s[0] != 'R' && s[0] != 'r'))
        throw fp::ConfigError("window must be R=<val> or r=<val>, got '" + s +
                              "'");
    const std::string v = s.substr(2);
    if (v == "inf")
        return {s[0], std::numeric_limits<double>::infinity()};
    try {
        return {s[0], std::stod(v)};
    } catch (const std::exception&) {
        throw fp::ConfigError("bad window value '" + v + "'");
    }
}

fp::KernelTable obtain_table(int dim, double sigma, double cell_size,
                             double coverage, const std::string& cache) {
    if (!cache.empty() && std::filesystem::exists(cache)) {
        auto t = fp::read_fpkt(cache);
        if (t.params().dim == dim && t.params().sigma == sigma &&
            t.params().cell_size == cell_size && t.max_offset() >= coverage)
            return t;
    }
    fp::KernelParams p;
    p.dim = dim;
    p.sigma = sigma;
    p.cell_size = cell_size;
    auto t = fp::build_kernel_table(p, coverage);
    if (!cache.empty())
        fp::write_fpkt(cache, t);
    return t;
}

void write_record(const fp::ExperimentRecord& rec, const std::string& out) {
    if (out.empty())
        return;
    std::ofstream js(out + ".json", std::ios::binary);
    std::ofstream cs(out + ".csv", std::ios::binary);
    if (!js || !cs)
        throw fp::IoError("cannot open output files at prefix: " + out);
    js << rec.to_json() << "\n";
    cs << rec.to_csv();
    if (!js || !cs)
        throw fp::IoError("write failed at prefix: " + out);
}

int finish_record(const fp::ExperimentRecord& rec, const std::string& out,
                  bool json_mode) {
    write_record(rec, out);
    if (json_mode) {
        std::cout << rec.to_json() << "\n";
    } else {
        for (const auto& v : rec.verdicts)
            std::cout << (v.pass ? "pass" : "FAIL") << "  " << v.invariant
                      << "  margin=" << v.margin << "\n";
    }
    return rec.all_pass() ? 0 : 5;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonlocal perimeter and Riesz energy toolkit"};
    app.require_subcommand(1);

    int threads = static_cast<int>(std::thread::hardware_concurrency());
    bool json_mode = false;
    std::string config_path;
    app.add_option("--threads", threads, "worker thread cap");
    app.add_flag("--json", json_mode, "JSON-only standard output");
    app.add_option("--config", config_path, "key=value config file");

    // shared option state
    std::string shape_str = "ball(0,0,0,0.5)";
    int dim = 1;
    double cell_size = 1.0 / 64;
    std::string grid_path, out_path, table_cache;
    double sigma = 0.5;
    std::string window_str = "R=inf";
    std::string renorm_str = "discrete";
    std::string engine_str = "direct";
    std::string rule_str = "center";
    double coverage = 0.0;
    std::string sigma_grid_str, R_grid_str = "1,2,4", r_grid_str = "1,0.5";
    std::string sweep_kind = "R";
    std::uint64_t seed = 42;
    std::string dims_str = "1,2";
    int trials = 100;
    bool corrupt = false;
    double tv_R = 1.0;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--threads", threads)->multi_option_policy(
            CLI::MultiOptionPolicy::TakeLast);
        cmd->add_flag("--json", json_mode);
    };
    const auto opt = [&](CLI::App* cmd, const std::string& name, auto& var,
                         const char* help = "") {
        return cmd->add_option(name, var, help)
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    };

    auto* c_rast = app.add_subcommand("rasterize", "shape -> FPGR grid file");
    opt(c_rast, "--shape", shape_str);
    opt(c_rast, "--dim", dim);
    opt(c_rast, "--cell-size", cell_size);
    opt(c_rast, "--rule", rule_str, "center|fraction");
    opt(c_rast, "--out", out_path)->required();
    add_common(c_rast);

    auto* c_energy = app.add_subcommand("energy", "evaluate one energy");
    opt(c_energy, "--grid", grid_path)->required();
    opt(c_energy, "--sigma", sigma);
    opt(c_energy, "--window", window_str, "R=<v>|r=<v>, inf allowed");
    opt(c_energy, "--renorm", renorm_str, "analytic|discrete|none");
    opt(c_energy, "--engine", engine_str, "direct|conv");
    opt(c_energy, "--coverage", coverage, "table reach override");
    opt(c_energy, "--table-cache", table_cache, "FPKT cache path");
    add_common(c_energy);

    auto* c_sweep = app.add_subcommand("sweep", "R / r / sigma sweeps");
    opt(c_sweep, "--kind", sweep_kind, "R|r|sigma");
    opt(c_sweep, "--shape", shape_str);
    opt(c_sweep, "--dim", dim);
    opt(c_sweep, "--cell-size", cell_size);
    opt(c_sweep, "--sigma-grid", sigma_grid_str);
    opt(c_sweep, "--R-grid", R_grid_str);
    opt(c_sweep, "--r-grid", r_grid_str);
    opt(c_sweep, "--renorm", renorm_str);
    opt(c_sweep, "--engine", engine_str);
    opt(c_sweep, "--seed", seed);
    opt(c_sweep, "--out", out_path, "output prefix (.json/.csv)");
    add_common(c_sweep);

    auto* c_iso = app.add_subcommand("iso", "isoperimetric comparisons");
    opt(c_iso, "--shape", shape_str, "ball(...) fixing the reference mass");
    opt(c_iso, "--dim", dim);
    opt(c_iso, "--cell-size", cell_size);
    opt(c_iso, "--sigma-grid", sigma_grid_str);
    opt(c_iso, "--engine", engine_str);
    opt(c_iso, "--seed", seed);
    opt(c_iso, "--out", out_path);
    add_common(c_iso);

    auto* c_suite = app.add_subcommand("suite", "randomized property suite");
    opt(c_suite, "--seed", seed);
    opt(c_suite, "--dims", dims_str);
    opt(c_suite, "--trials", trials);
    c_suite->add_flag("--corrupt-table", corrupt,
                      "fault-injection self-test: the window-split invariance verdict must fail");
    opt(c_suite, "--out", out_path);
    add_common(c_suite);

    auto* c_rearr = app.add_subcommand("rearrange",
                                       "symmetric decreasing rearrangement");
    opt(c_rearr, "--grid", grid_path)->required();
    opt(c_rearr, "--out", out_path)->required();
    add_common(c_rearr);

    auto* c_tv = app.add_subcommand("tv", "layer-cake total variation");
    opt(c_tv, "--grid", grid_path)->required();
    opt(c_tv, "--sigma", sigma);
    opt(c_tv, "--R", tv_R);
    opt(c_tv, "--coverage", coverage);
    add_common(c_tv);

    try {
        // config file values first, command line wins via take-last
        std::vector<std::string> args(argv + 1, argv + argc);
        for (std::size_t i = 0; i + 1 < args.size(); ++i)
            if (args[i] == "--config") {
                const auto extra = config_file_args(args[i + 1]);
                args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                           args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
                // insert after the subcommand name (first token)
                const auto at = args.empty() ? args.begin()
                                             : args.begin() + 1;
                args.insert(at, extra.begin(), extra.end());
                break;
            }
        std::vector<const char*> cargs{argv[0]};
        for (const auto& a : args)
            cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const fp::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    fp::worker_threads() = std::max(1, threads);

    try {
        if (c_rast->parsed()) {
            const auto shape = parse_shape(shape_str);
            const auto dom = fp::domain_for_shape(shape, dim, cell_size);
            const auto rule = rule_str == "fraction"
                                  ? fp::RasterRule::VolumeFractionThreshold
                                  : fp::RasterRule::CenterSample;
            if (rule_str != "center" && rule_str != "fraction")
                throw fp::ConfigError("rule must be center|fraction, got '" +
                                      rule_str + "'");
            const auto E = fp::rasterize(shape, dom, rule);
            fp::write_fpgr(out_path, E);
            json j;
            j["volume"] = fp::volume(E);
            j["diameter"] =
                E.occupied_count() ? fp::diameter(E) : 0.0;
            j["cells"] = E.occupied_count();
            j["path"] = out_path;
            std::cout << j.dump() << "\n";
            return 0;
        }

        if (c_energy->parsed()) {
            const auto E = fp::read_fpgr_indicator(grid_path);
            const auto [kind, radius] = parse_window(window_str);
            const auto renorm = parse_renorm(renorm_str);
            const auto engine = parse_engine(engine_str);
            double cov = coverage;
            if (cov <= 0.0) {
                const double diam = E.occupied_count()
                                        ? fp::diameter(E)
                                        : E.domain.cell_size;
                cov = diam + 2 * E.domain.cell_size;
                if (kind == 'R' && !std::isinf(radius) &&
                    renorm != fp::RenormMode::DiscreteGamma)
                    cov = std::max(cov, radius);
                if (kind == 'r' && !std::isinf(radius))
                    cov = std::max(cov, radius + E.domain.cell_size);
            }
            const auto table = obtain_table(E.domain.dim, sigma,
                                            E.domain.cell_size, cov,
                                            table_cache);
            const auto rep =
                kind == 'R'
                    ? fp::H_energy(E, table, radius, renorm, engine)
                    : fp::J_energy(E, table, radius, renorm, engine);
            std::cout << rep.to_json() << "\n";
            return 0;
        }

        if (c_sweep->parsed() || c_iso->parsed()) {
            fp::SweepConfig cfg;
            cfg.shape = parse_shape(shape_str);
            cfg.dim = dim;
            cfg.cell_size = cell_size;
            cfg.sigma_grid = sigma_grid_str.empty()
                                 ? std::vector<double>{sigma}
                                 : parse_grid_list(sigma_grid_str,
                                                   "sigma-grid");
            cfg.R_grid = parse_grid_list(R_grid_str, "R-grid");
            cfg.r_grid = parse_grid_list(r_grid_str, "r-grid");
            cfg.renorm = parse_renorm(renorm_str);
            cfg.engine = parse_engine(engine_str);
            cfg.seed = seed;
            fp::ExperimentRecord rec;
            if (c_iso->parsed())
                rec = fp::isoperimetric_experiment(cfg);
            else if (sweep_kind == "R")
                rec = fp::sweep_R_limit(cfg);
            else if (sweep_kind == "r")
                rec = fp::sweep_r_limit(cfg);
            else if (sweep_kind == "sigma")
                rec = fp::sweep_sigma_continuity(cfg);
            else
                throw fp::ConfigError("sweep kind must be R|r|sigma, got '" +
                                      sweep_kind + "'");
            return finish_record(rec, out_path, json_mode);
        }

        if (c_suite->parsed()) {
            std::vector<int> dims;
            for (double d : parse_grid_list(dims_str, "dims"))
                dims.push_back(static_cast<int>(d));
            const auto rec = fp::property_suite(seed, dims, trials, corrupt);
            return finish_record(rec, out_path, json_mode);
        }

        if (c_rearr->parsed()) {
            const auto g = fp::read_fpgr(grid_path);
            if (std::holds_alternative<fp::IndicatorGrid>(g)) {
                const auto& E = std::get<fp::IndicatorGrid>(g);
                const auto plan = fp::RearrangementPlan::build(E.domain);
                fp::write_fpgr(out_path, fp::rearrange(E, plan));
            } else {
                const auto& eta = std::get<fp::DensityGrid>(g);
                const auto plan = fp::RearrangementPlan::build(eta.domain);
                fp::write_fpgr(out_path, fp::rearrange(eta, plan));
            }
            json j;
            j["path"] = out_path;
            std::cout << j.dump() << "\n";
            return 0;
        }

        if (c_tv->parsed()) {
            const auto u = fp::read_fpgr_density(grid_path);
            double cov = coverage > 0.0 ? coverage : tv_R + u.domain.cell_size;
            const auto table = obtain_table(u.domain.dim, sigma,
                                            u.domain.cell_size, cov,
                                            table_cache);
            json j;
            j["tv"] = fp::tv_energy(u, table, tv_R);
            j["sigma"] = sigma;
            j["R"] = tv_R;
            std::cout << j.dump() << "\n";
            return 0;
        }
    } catch (const fp::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 4;
    } catch (const fp::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
