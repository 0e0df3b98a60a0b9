// nilray: geodesic X-ray transform experiments on 2-step nilpotent Lie groups.
//
// Subcommands: phantom | forward | invert | escape | flats | reduce | report.
// Every run is driven by a plain-text KEY=VALUE config file; every output
// embeds the config hash, the seed and the convention notes, and identical
// config + seed produces byte-identical files.
//
// Exit codes: 0 ok, 2 validation, 3 numeric, 4 not-found (flat search).

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "nilray/escape.hpp"
#include "nilray/flats.hpp"
#include "nilray/geodesic.hpp"
#include "nilray/io.hpp"
#include "nilray/parallel.hpp"
#include "nilray/phantom.hpp"
#include "nilray/radon2d.hpp"
#include "nilray/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace nilray;

namespace {

struct Config {
    std::string raw;
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    }
    std::string require(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end())
            throw std::invalid_argument("config: missing required key '" + key + "'");
        return it->second;
    }
    double num(const std::string& key, double fallback) const {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : parse_double(it->second);
    }
    long integer(const std::string& key, long fallback) const {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : std::stol(it->second);
    }
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

Config load_config(const fs::path& path) {
    Config cfg;
    cfg.raw = read_text_file(path);
    std::istringstream in(cfg.raw);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected KEY=VALUE");
        cfg.kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return cfg;
}

struct RunContext {
    Config cfg;
    fs::path out;
    std::uint64_t seed = 0;
    int workers = 1;
    std::optional<double> tol_override;

    double tol(const std::string& key, double fallback) const {
        const double t = tol_override ? *tol_override : cfg.num(key, fallback);
        if (t <= 0.0) throw std::invalid_argument("tolerance must be positive");
        return t;
    }
    int grid(const std::string& key, long fallback) const {
        const long g = cfg.integer(key, fallback);
        if (g < 2) throw std::invalid_argument("grid size '" + key + "' must be >= 2");
        return static_cast<int>(g);
    }
    OutputMeta meta() const {
        OutputMeta m;
        m.config_hash = fnv1a64_hex(cfg.raw);
        m.seed = seed;
        m.add("convention",
              "exponential coordinates; coordinate-ball radii; line orientation quotiented");
        m.add("metric_note", "z basis orthonormal under <A,B> = -Re tr(AB)");
        return m;
    }
};

std::shared_ptr<const StepTwoAlgebra> load_algebra_spec(const std::string& spec) {
    if (spec.rfind("nq:", 0) == 0)
        return std::make_shared<const StepTwoAlgebra>(build_nq(std::stoi(spec.substr(3))));
    if (spec.rfind("abelian:", 0) == 0)
        return std::make_shared<const StepTwoAlgebra>(
            build_abelian(std::stoi(spec.substr(8))));
    return std::make_shared<const StepTwoAlgebra>(load_algebra(spec));
}

// ---------------------------------------------------------------- phantom --

int cmd_phantom(const RunContext& ctx) {
    const int dim = static_cast<int>(ctx.cfg.integer("dim", 2));
    const int bumps = static_cast<int>(ctx.cfg.integer("bumps", 1));
    const double domain_radius = ctx.cfg.num("domain_radius", 1.0);
    const std::string profile = ctx.cfg.get("profile", "bump");
    const double amplitude = ctx.cfg.num("amplitude", 1.0);
    const bool randomize = ctx.cfg.integer("randomize", bumps > 1 ? 1 : 0) != 0;

    Phantom ph;
    if (randomize) {
        Rng rng(ctx.seed);
        ph = random_phantom(rng, dim, bumps, domain_radius, profile);
        for (auto& b : ph.bumps) b.amplitude *= amplitude;
    } else {
        ph = single_bump_phantom(dim, amplitude,
                                 ctx.cfg.num("radius_frac", 0.5) * domain_radius, profile);
    }
    OutputMeta meta = ctx.meta();
    meta.add("dim", static_cast<std::int64_t>(dim));
    meta.add("profile", profile);
    save_phantom(ph, ctx.out, meta);
    return 0;
}

// ---------------------------------------------------------------- forward --

int cmd_forward(const RunContext& ctx) {
    auto ph = std::make_shared<const Phantom>(load_phantom(ctx.cfg.require("phantom")));
    if (ph->dim != 2)
        throw std::invalid_argument("forward: the sinogram engine needs a 2-d phantom");
    const ScalarField2D f = field_from_phantom(ph);
    const int n_theta = ctx.grid("thetas", 360);
    const int n_off = ctx.grid("offsets", 512);
    double pmax = ctx.cfg.num("pmax", 0.0);
    if (pmax <= 0.0) pmax = 1.05 * (f.support_center.norm() + f.support_radius);
    const double quad_tol = ctx.tol("tol", 1e-9);

    Sinogram sino;
    sino.thetas = uniform_thetas(n_theta);
    sino.offsets = uniform_offsets(n_off, pmax);
    sino.quad_tol = quad_tol;
    sino.field_id = fnv1a64_hex(phantom_to_json(*ph, OutputMeta{}));
    sino.values.resize(n_theta, n_off);
    parallel_for(n_theta, ctx.workers, [&](int i) {
        for (int j = 0; j < n_off; ++j)
            sino.values(i, j) =
                xray_line_integral(f, LineR2{sino.thetas[i], sino.offsets[j]}, quad_tol);
    });

    write_sinogram_csv(ctx.out, sino, ctx.meta());
    return 0;
}

// ----------------------------------------------------------------- invert --

int cmd_invert(const RunContext& ctx) {
    const Sinogram sino = read_sinogram_csv(ctx.cfg.require("sinogram"));
    std::shared_ptr<const Phantom> ph;
    if (ctx.cfg.has("phantom"))
        ph = std::make_shared<const Phantom>(load_phantom(ctx.cfg.get("phantom", "")));

    double bound = ctx.cfg.num("bound", 0.0);
    if (bound <= 0.0) {
        if (!ph) throw std::invalid_argument("invert: need either bound or phantom");
        bound = ph->support_center().cwiseAbs().maxCoeff() + ph->support_radius();
    }
    const int nx = ctx.grid("grid_nx", 41);
    const int ny = ctx.grid("grid_ny", 41);
    RadonInvertOptions opt;
    opt.grid = ctx.grid("invert_grid", 256);
    opt.n_dirs = ctx.grid("invert_dirs", 180);
    opt.strict_tail = ctx.cfg.integer("strict_tail", 0) != 0;
    const double tmax_override = ctx.cfg.num("tmax_override", 0.0);
    const double pmax = std::abs(sino.offsets.back());

    const LineOracle oracle = sino.interpolating_oracle();
    std::vector<ordered_json> entries(static_cast<std::size_t>(nx) * ny);
    std::vector<double> errs(entries.size(), 0.0);
    parallel_for(nx * ny, ctx.workers, [&](int idx) {
        const int i = idx % nx, j = idx / nx;
        const Eigen::Vector2d x(-bound + 2.0 * bound * i / (nx - 1),
                                -bound + 2.0 * bound * j / (ny - 1));
        const double t_max = tmax_override > 0.0 ? tmax_override : x.norm() + pmax + 0.1;
        const double rec = radon_invert(oracle, x, t_max, opt);
        ordered_json e;
        e["x"] = {x[0], x[1]};
        e["f_rec"] = rec;
        if (ph) {
            const double truth = ph->eval(x);
            e["f_true"] = truth;
            e["abs_err"] = std::abs(rec - truth);
            errs[static_cast<std::size_t>(idx)] = std::abs(rec - truth);
        }
        entries[static_cast<std::size_t>(idx)] = std::move(e);
    });

    ordered_json doc;
    const OutputMeta meta = ctx.meta();
    doc["meta"]["config_hash"] = meta.config_hash;
    doc["meta"]["seed"] = meta.seed;
    for (const auto& [k, v] : meta.entries) doc["meta"][k] = v;
    doc["meta"]["invert_grid"] = opt.grid;
    doc["meta"]["invert_dirs"] = opt.n_dirs;
    doc["points"] = entries;
    if (ph) {
        doc["stats"]["max_abs_err"] = *std::max_element(errs.begin(), errs.end());
        doc["stats"]["mean_abs_err"] =
            std::accumulate(errs.begin(), errs.end(), 0.0) / errs.size();
        doc["stats"]["max_abs_f"] = ph->max_abs_estimate();
    }
    write_text_file(ctx.out, doc.dump(2) + "\n");
    return 0;
}

// ----------------------------------------------------------------- escape --

int cmd_escape(const RunContext& ctx) {
    auto algebra = load_algebra_spec(ctx.cfg.get("algebra", "nq:3"));
    const int count = static_cast<int>(ctx.cfg.integer("count", 10000));
    const double tmax = ctx.cfg.num("tmax", 50.0);
    const int tsamples = ctx.grid("tsamples", 32);
    const std::string rows_mode = ctx.cfg.get("rows", "full");
    const bool full_rows = rows_mode == "full";

    std::vector<double> grid(tsamples);
    for (int i = 0; i < tsamples; ++i) grid[i] = tmax * (i + 1) / tsamples;

    if (rows_mode == "trace") {
        // single-geodesic trajectory export: t,z...,h...
        Rng rng(ctx.seed);
        const Eigen::VectorXd dir = rng.unit_vector(algebra->dim_n());
        const GeodesicN g(algebra, algebra->identity(), dir.head(algebra->dim_z()),
                          dir.tail(algebra->dim_h()));
        std::vector<double> trace_grid = {0.0};
        trace_grid.insert(trace_grid.end(), grid.begin(), grid.end());
        const auto zs = g.z_profile(trace_grid);
        std::string header = "t";
        for (int i = 0; i < algebra->dim_z(); ++i) header += ",z" + std::to_string(i);
        for (int i = 0; i < algebra->dim_h(); ++i) header += ",h" + std::to_string(i);
        std::vector<std::string> lines;
        for (std::size_t k = 0; k < trace_grid.size(); ++k) {
            std::string line = fmt_double(trace_grid[k]);
            for (int i = 0; i < algebra->dim_z(); ++i) line += "," + fmt_double(zs[k][i]);
            const Eigen::VectorXd h = g.h_at(trace_grid[k]);
            for (int i = 0; i < algebra->dim_h(); ++i) line += "," + fmt_double(h[i]);
            lines.push_back(std::move(line));
        }
        OutputMeta meta = ctx.meta();
        meta.add("algebra", ctx.cfg.get("algebra", "nq:3"));
        meta.add("kind", "geodesic_trace");
        write_csv_lines(ctx.out, meta, header, lines);
        return 0;
    }

    std::vector<EscapeReport> reports(count);
    parallel_for(count, ctx.workers, [&](int k) {
        Rng rng(ctx.seed + static_cast<std::uint64_t>(k));
        const Eigen::VectorXd dir = rng.unit_vector(algebra->dim_n());
        const GeodesicN g(algebra, algebra->identity(), dir.head(algebra->dim_z()),
                          dir.tail(algebra->dim_h()));
        reports[static_cast<std::size_t>(k)] = escape_bound_check(g, grid);
    });

    std::vector<std::string> lines;
    double min_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < count; ++k) {
        const auto& rep = reports[static_cast<std::size_t>(k)];
        min_margin = std::min(min_margin, rep.min_margin);
        const EscapeSample* worst = nullptr;
        for (const auto& s : rep.samples) {
            if (!worst || s.margin < worst->margin) worst = &s;
            if (full_rows)
                lines.push_back(std::to_string(ctx.seed + k) + "," + fmt_double(s.t) + "," +
                                fmt_double(s.lhs_sq) + "," + fmt_double(s.bound) + "," +
                                fmt_double(s.margin) + "," + s.case_tag);
        }
        if (!full_rows && worst)
            lines.push_back(std::to_string(ctx.seed + k) + "," + fmt_double(worst->t) + "," +
                            fmt_double(worst->lhs_sq) + "," + fmt_double(worst->bound) + "," +
                            fmt_double(worst->margin) + "," + worst->case_tag);
    }

    OutputMeta meta = ctx.meta();
    meta.add("algebra", ctx.cfg.get("algebra", "nq:3"));
    meta.add("count", static_cast<std::int64_t>(count));
    meta.add("min_margin", min_margin);
    write_csv_lines(ctx.out, meta, "seed,t,lhs_norm_sq,bound,margin,case_tag", lines);
    return 0;
}

// ------------------------------------------------------------------ flats --

int cmd_flats(const RunContext& ctx) {
    auto algebra = load_algebra_spec(ctx.cfg.get("algebra", "nq:3"));
    const auto& a = *algebra;
    const std::string mode = ctx.cfg.get("mode", "catalog");

    FlatSearchOptions so;
    so.tol = ctx.tol("tol", 1e-7);
    so.budget = static_cast<int>(ctx.cfg.integer("budget", 2400));
    so.restarts = static_cast<int>(ctx.cfg.integer("restarts", 6));
    so.seed = ctx.seed;

    std::vector<AlgebraVector> tangents;
    if (mode == "catalog") {
        if (a.dim_z() >= 2) {
            AlgebraVector v = a.zero_vector();
            v.z[0] = 1.0;
            tangents.push_back(v);  // central vertex
        }
        AlgebraVector h = a.zero_vector();
        h.h[0] = 1.0;
        tangents.push_back(h);  // horizontal vertex (kernel-structured in N_q)
    } else if (mode == "random") {
        const int count = static_cast<int>(ctx.cfg.integer("count", 4));
        Rng rng(ctx.seed);
        for (int i = 0; i < count; ++i) {
            const Eigen::VectorXd dir = rng.unit_vector(a.dim_n());
            tangents.push_back({dir.head(a.dim_z()), dir.tail(a.dim_h())});
        }
    } else {
        throw std::invalid_argument("flats: mode must be catalog or random");
    }

    std::vector<FlatSearchRecord> records;
    int found = 0;
    for (const auto& t : tangents) {
        FlatSearchRecord rec;
        rec.tangent = t;
        rec.result = find_flat_through(algebra, a.identity(), t, so);
        if (rec.result.found()) ++found;
        records.push_back(std::move(rec));
    }

    OutputMeta meta = ctx.meta();
    meta.add("algebra", ctx.cfg.get("algebra", "nq:3"));
    meta.add("mode", mode);
    meta.add("found", static_cast<std::int64_t>(found));
    meta.add("searched", static_cast<std::int64_t>(tangents.size()));
    save_atlas_json(ctx.out, records, meta);
    return found == 0 ? 4 : 0;
}

// ----------------------------------------------------------------- reduce --

int cmd_reduce(const RunContext& ctx) {
    auto algebra = load_algebra_spec(ctx.cfg.require("algebra"));
    const auto& a = *algebra;
    auto ph = std::make_shared<const Phantom>(load_phantom(ctx.cfg.require("phantom")));
    const ScalarFieldN f = field_from_phantom_n(algebra, ph);
    const GeodesicOracleN oracle = quadrature_geodesic_oracle(f, ctx.tol("tol", 1e-9));

    std::unique_ptr<FlatAtlas> atlas;
    const std::string atlas_spec = ctx.cfg.get("atlas", "");
    auto split_axes = [](const std::string& s) {
        const auto c1 = s.find(':');
        const auto c2 = s.find(':', c1 + 1);
        return std::pair<int, int>(std::stoi(s.substr(c1 + 1, c2 - c1 - 1)),
                                   std::stoi(s.substr(c2 + 1)));
    };
    if (atlas_spec.rfind("central:", 0) == 0) {
        const auto [i, j] = split_axes(atlas_spec);
        atlas = std::make_unique<CallbackAtlas>(central_plane_atlas(algebra, i, j));
    } else if (atlas_spec.rfind("axes:", 0) == 0) {
        const auto [i, j] = split_axes(atlas_spec);
        atlas = std::make_unique<CallbackAtlas>(axis_plane_atlas(algebra, i, j));
    } else if (atlas_spec.rfind("file:", 0) == 0) {
        atlas = std::make_unique<ListAtlas>(load_atlas_json(algebra, atlas_spec.substr(5)));
    } else {
        throw std::invalid_argument("reduce: atlas must be central:i:j, axes:i:j or file:path");
    }

    std::vector<GroupPoint> points;
    const std::string pts_spec = ctx.cfg.get("points", "random:8:0.3");
    if (pts_spec == "origin") {
        points.push_back(a.identity());
    } else if (pts_spec.rfind("random:", 0) == 0) {
        const auto c1 = pts_spec.find(':');
        const auto c2 = pts_spec.find(':', c1 + 1);
        const int count = std::stoi(pts_spec.substr(c1 + 1, c2 - c1 - 1));
        const double radius = parse_double(pts_spec.substr(c2 + 1));
        Rng rng(ctx.seed);
        const std::string span = ctx.cfg.get("point_span", "all");
        for (int i = 0; i < count; ++i) {
            AlgebraVector c = a.zero_vector();
            if (span == "central") {
                c.z = rng.in_ball(a.dim_z(), radius);
            } else {
                const Eigen::VectorXd v = rng.in_ball(a.dim_n(), radius);
                c.z = v.head(a.dim_z());
                c.h = v.tail(a.dim_h());
            }
            points.push_back(GroupPoint(c));
        }
    } else {
        throw std::invalid_argument("reduce: points must be origin or random:count:radius");
    }

    ReduceOptions opts;
    opts.invert.grid = ctx.grid("invert_grid", 256);
    opts.invert.n_dirs = ctx.grid("invert_dirs", 128);
    opts.support_center = f.support_center;
    opts.support_radius = f.support_radius;

    std::vector<ordered_json> entries(points.size());
    std::vector<double> errs(points.size(), 0.0);
    std::atomic<int> misses{0};
    parallel_for(static_cast<int>(points.size()), ctx.workers, [&](int i) {
        const GroupPoint& x = points[static_cast<std::size_t>(i)];
        ordered_json e;
        std::vector<double> coords(x.coords.z.data(), x.coords.z.data() + x.coords.z.size());
        for (int k = 0; k < x.coords.h.size(); ++k) coords.push_back(x.coords.h[k]);
        e["x"] = coords;
        try {
            const double rec = reduce_and_invert(oracle, *atlas, x, opts);
            const double truth = f.eval(x);
            e["f_true"] = truth;
            e["f_rec"] = rec;
            e["abs_err"] = std::abs(rec - truth);
            errs[static_cast<std::size_t>(i)] = std::abs(rec - truth);
        } catch (const FlatNotFoundError& err) {
            e["not_found"] = true;
            e["best_residual"] = err.best_residual();
            misses.fetch_add(1);
        }
        entries[static_cast<std::size_t>(i)] = std::move(e);
    });

    ordered_json doc;
    const OutputMeta meta = ctx.meta();
    doc["meta"]["config_hash"] = meta.config_hash;
    doc["meta"]["seed"] = meta.seed;
    for (const auto& [k, v] : meta.entries) doc["meta"][k] = v;
    doc["points"] = entries;
    doc["stats"]["max_abs_err"] = *std::max_element(errs.begin(), errs.end());
    doc["stats"]["max_abs_f"] = ph->max_abs_estimate();
    doc["stats"]["not_found"] = misses.load();
    write_text_file(ctx.out, doc.dump(2) + "\n");
    return misses.load() == static_cast<int>(points.size()) && !points.empty() ? 4 : 0;
}

// ----------------------------------------------------------------- report --

int cmd_report(const RunContext& ctx) {
    ordered_json tables;
    std::istringstream in(ctx.cfg.require("inputs"));
    std::string item;
    while (std::getline(in, item, ',')) {
        const std::string path = trim(item);
        if (path.empty()) continue;
        const std::string text = read_text_file(path);
        ordered_json entry;
        if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
            std::istringstream lines(text);
            std::string line, header;
            std::vector<std::vector<std::string>> rows;
            while (std::getline(lines, line)) {
                if (line.empty() || line[0] == '#') continue;
                if (header.empty()) {
                    header = line;
                    continue;
                }
                std::vector<std::string> cells;
                std::istringstream ls(line);
                std::string cell;
                while (std::getline(ls, cell, ',')) cells.push_back(cell);
                rows.push_back(std::move(cells));
            }
            entry["rows"] = rows.size();
            if (header.rfind("seed,", 0) == 0 && header.find("margin") != std::string::npos) {
                double min_margin = std::numeric_limits<double>::infinity();
                for (const auto& r : rows)
                    if (r.size() >= 5) min_margin = std::min(min_margin, parse_double(r[4]));
                entry["min_margin"] = min_margin;
            } else if (header.rfind("theta,", 0) == 0) {
                double max_abs = 0.0, sum_abs = 0.0;
                for (const auto& r : rows)
                    if (r.size() >= 3) {
                        const double v = std::abs(parse_double(r[2]));
                        max_abs = std::max(max_abs, v);
                        sum_abs += v;
                    }
                entry["max_abs_value"] = max_abs;
                entry["mean_abs_value"] = rows.empty() ? 0.0 : sum_abs / rows.size();
            }
        } else {
            const auto doc = nlohmann::json::parse(text);
            if (doc.contains("points")) {
                double max_err = 0.0, sum_err = 0.0, max_rec = 0.0;
                int with_err = 0;
                for (const auto& p : doc["points"]) {
                    if (p.contains("abs_err")) {
                        max_err = std::max(max_err, p["abs_err"].get<double>());
                        sum_err += p["abs_err"].get<double>();
                        ++with_err;
                    }
                    if (p.contains("f_rec"))
                        max_rec = std::max(max_rec, std::abs(p["f_rec"].get<double>()));
                }
                entry["points"] = doc["points"].size();
                if (with_err) {
                    entry["max_abs_err"] = max_err;
                    entry["mean_abs_err"] = sum_err / with_err;
                }
                entry["max_abs_rec"] = max_rec;
            } else if (doc.contains("flats")) {
                entry["flats"] = doc["flats"].size();
                entry["not_found"] = doc["not_found"].size();
                double worst = 0.0;
                for (const auto& fl : doc["flats"])
                    worst = std::max(worst, fl["residual"].get<double>());
                entry["max_flat_residual"] = worst;
            } else if (doc.contains("bumps")) {
                entry["bumps"] = doc["bumps"].size();
            }
        }
        tables[fs::path(path).filename().string()] = std::move(entry);
    }

    ordered_json doc;
    const OutputMeta meta = ctx.meta();
    doc["meta"]["config_hash"] = meta.config_hash;
    doc["meta"]["seed"] = meta.seed;
    for (const auto& [k, v] : meta.entries) doc["meta"][k] = v;
    doc["tables"] = std::move(tables);
    write_text_file(ctx.out, doc.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geodesic X-ray transform on 2-step nilpotent Lie groups"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
    int workers = 1;
    double tol_flag = 0.0;
    bool tol_given = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "KEY=VALUE config file")->required();
        cmd->add_option("--out", out_path, "output path")->required();
        cmd->add_option("--seed", seed_flag, "seed override")
            ->each([&](const std::string&) { seed_given = true; });
        cmd->add_option("--workers", workers, "worker threads (default 1, bit-exact baseline)");
        cmd->add_option("--tol", tol_flag, "tolerance override")
            ->each([&](const std::string&) { tol_given = true; });
    };

    const std::vector<std::pair<std::string, int (*)(const RunContext&)>> commands = {
        {"phantom", cmd_phantom}, {"forward", cmd_forward}, {"invert", cmd_invert},
        {"escape", cmd_escape},   {"flats", cmd_flats},     {"reduce", cmd_reduce},
        {"report", cmd_report}};
    for (const auto& [name, fn] : commands) add_common(app.add_subcommand(name));

    CLI11_PARSE(app, argc, argv);

    try {
        RunContext ctx;
        ctx.cfg = load_config(config_path);
        ctx.out = out_path;
        ctx.seed = seed_given ? seed_flag
                              : static_cast<std::uint64_t>(ctx.cfg.integer("seed", 0));
        ctx.workers = workers;
        if (tol_given) ctx.tol_override = tol_flag;

        for (const auto& [name, fn] : commands)
            if (app.got_subcommand(name)) return fn(ctx);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const FlatNotFoundError& e) {
        std::cerr << "not found: " << e.what() << "\n";
        return 4;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
