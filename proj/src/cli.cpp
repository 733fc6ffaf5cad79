#include "lipreach/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>

#include "lipreach/errors.hpp"
#include "lipreach/io.hpp"

namespace lipreach::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<double> parse_coords(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(';', start);
        if (end == std::string::npos) end = text.size();
        std::string part = text.substr(start, end - start);
        char* stop = nullptr;
        double v = std::strtod(part.c_str(), &stop);
        if (part.empty() || *stop != '\0') throw UsageError("bad coordinate '" + part + "'");
        out.push_back(v);
        start = end + 1;
    }
    return out;
}

// Grid points of every component: `res` points per non-degenerate axis,
// endpoints included, last axis fastest.
std::vector<StatePoint> grid_points(const MdpModel& model, int res) {
    std::vector<StatePoint> out;
    for (const auto& comp : model.components) {
        const Box& b = comp.box;
        const std::size_t d = b.dim();
        std::vector<std::size_t> n(d, 1), idx(d, 0);
        for (std::size_t j = 0; j < d; ++j)
            if (!b.degenerate(j)) n[j] = static_cast<std::size_t>(res);
        while (true) {
            StatePoint s{b.lo, comp.tag};
            for (std::size_t j = 0; j < d; ++j)
                if (n[j] > 1) s.coords[j] = b.lo[j] + b.extent(j) * static_cast<double>(idx[j]) / static_cast<double>(n[j] - 1);
            out.push_back(std::move(s));
            std::size_t j = d;
            while (j > 0 && ++idx[j - 1] == n[j - 1]) idx[--j] = 0;
            if (j == 0) break;
        }
    }
    return out;
}

std::string label(const MdpModel& model, const ActionPoint& a) {
    if (a.coords.empty() && a.tag >= 0 && static_cast<std::size_t>(a.tag) < model.action_names.size())
        return model.action_names[static_cast<std::size_t>(a.tag)];
    return io::encode_point(a.coords, a.tag);
}

struct Failure {
    int code;
    json record;
};

Failure classify(const std::exception& e) {
    if (auto* p = dynamic_cast<const ParseError*>(&e))
        return {kParse, {{"error", "parse"}, {"message", p->what()}, {"line", p->line}, {"column", p->column}}};
    if (dynamic_cast<const IntegrityError*>(&e)) return {kParse, {{"error", "integrity"}, {"message", e.what()}}};
    if (dynamic_cast<const UsageError*>(&e)) return {kUsage, {{"error", "usage"}, {"message", e.what()}}};
    if (dynamic_cast<const UnsupportedModel*>(&e)) return {kUsage, {{"error", "unsupported-model"}, {"message", e.what()}}};
    if (auto* b = dynamic_cast<const BudgetExceeded*>(&e))
        return {kBudget, {{"error", "budget"}, {"message", b->what()}, {"achieved_precision", b->achieved_precision}}};
    if (auto* c = dynamic_cast<const BoundCrossing*>(&e))
        return {kUnsound,
                {{"error", "bound-crossing"},
                 {"message", c->what()},
                 {"state", io::encode_point(c->state.coords, c->state.tag)},
                 {"action", io::encode_point(c->action.coords, c->action.tag)},
                 {"lower", c->lower},
                 {"upper", c->upper}}};
    if (auto* s = dynamic_cast<const Stagnation*>(&e))
        return {kUnsound, {{"error", "stagnation"}, {"message", s->what()}, {"step", s->step}, {"gap", s->gap}}};
    if (dynamic_cast<const std::bad_alloc*>(&e)) return {kInternal, {{"error", "out-of-memory"}, {"message", e.what()}}};
    return {kInternal, {{"error", "internal"}, {"message", e.what()}}};
}

int report(const Failure& f, std::ostream& err, const std::string& out_dir) {
    err << f.record.dump() << "\n";
    if (!out_dir.empty() && fs::is_directory(out_dir)) {
        try {
            io::write_file_atomic((fs::path(out_dir) / "error.json").string(), f.record.dump(2) + "\n");
        } catch (const std::exception&) {
        }
    }
    return f.code;
}

}  // namespace

RegionSet parse_shape(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t end = text.find(':', start);
        parts.push_back(text.substr(start, end == std::string::npos ? std::string::npos : end - start));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    if (parts.size() != 4) throw UsageError("shape '" + text + "' needs kind:tag:a:b");
    int tag = std::stoi(parts[1]);
    if (parts[0] == "ball") {
        double r = parse_coords(parts[3]).at(0);
        if (!(r > 0)) throw UsageError("ball radius must be positive");
        return RegionSet::ball(tag, parse_coords(parts[2]), r);
    }
    if (parts[0] == "box") {
        Box b{parse_coords(parts[2]), parse_coords(parts[3])};
        if (b.lo.size() != b.hi.size()) throw UsageError("box corners differ in dimension");
        return RegionSet::box(tag, b);
    }
    throw UsageError("unknown shape kind '" + parts[0] + "'");
}

int run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
    std::string out_dir;
    try {
        if (spec.curve_res < 2 || spec.map_res < 2) throw UsageError("curve and map resolution must be >= 2");
        if (!(spec.gamma > 0 && spec.gamma <= 1)) throw UsageError("gamma must lie in (0, 1]");
        MdpModel model = io::resolve_model(spec.model, spec.catalog);
        if (spec.gamma < 1) model = discount_transform(model, spec.gamma);
        SolverConfig cfg = spec.solver;
        if (!spec.avoid.empty()) {
            RegionSet avoid;
            for (const auto& a : spec.avoid) avoid.merge(parse_shape(a));
            cfg.avoid = avoid;
        }
        std::error_code ec;
        fs::create_directories(spec.out, ec);
        if (ec || !fs::is_directory(spec.out)) throw UsageError("cannot create output directory '" + spec.out + "'");
        out_dir = spec.out;
        fs::remove(fs::path(out_dir) / "error.json", ec);

        const auto wall = std::chrono::steady_clock::now();
        Solver solver(model, cfg);
        if (!spec.snapshot_in.empty())
            solver.warm_start(io::read_snapshot(io::read_file(spec.snapshot_in), solver.model()));

        io::Header header{"", io::kCurrentVersion, {}};
        header.meta = {{"model", solver.model().name},
                       {"model_ref", spec.model},
                       {"fingerprint", solver.model().fingerprint()},
                       {"lipschitz_state", num(solver.model().lipschitz_state)},
                       {"lipschitz_pair", num(solver.model().lipschitz_pair)},
                       {"gamma", num(spec.gamma)},
                       {"k", std::to_string(spec.catalog.k)},
                       {"wave", spec.catalog.wave == models::Wave::sine ? "sine" : "triangle"},
                       {"bad_constant", spec.catalog.bad_constant ? "true" : "false"},
                       {"catalog_seed", std::to_string(spec.catalog.seed)},
                       {"curve_res", std::to_string(spec.curve_res)},
                       {"map_res", std::to_string(spec.map_res)},
                       {"warm_start", spec.snapshot_in}};
        std::string avoid;
        for (const auto& a : spec.avoid) avoid += (avoid.empty() ? "" : " ") + a;
        header.meta.emplace_back("avoid", avoid);
        for (auto& kv : io::config_meta(cfg)) header.meta.push_back(std::move(kv));

        const fs::path dir(out_dir);
        std::optional<Failure> failure;
        SolverResult result;
        try {
            result = solver.run();
        } catch (const BoundCrossing& e) {
            failure = classify(e);
        } catch (const Stagnation& e) {
            failure = classify(e);
        }
        io::write_file_atomic((dir / "trace.csv").string(), io::write_trace(header, solver.trace()));

        std::vector<std::pair<std::string, std::string>> summary;
        if (failure) {
            summary = {{"outcome", failure->record["error"].get<std::string>()},
                       {"message", failure->record["message"].get<std::string>()}};
        } else {
            summary = {{"outcome", to_string(result.outcome)},
                       {"lower", num(result.lower)},
                       {"upper", num(result.upper)},
                       {"gap", num(result.upper - result.lower)},
                       {"steps", std::to_string(result.steps)},
                       {"precision_floor", num(result.precision_floor)}};
            for (std::size_t i = 0; i < result.notes.size(); ++i)
                summary.emplace_back("note" + std::to_string(i + 1), result.notes[i]);
        }
        if (solver.layers() > 0) summary.emplace_back("store_size", std::to_string(solver.store().size()));
        summary.emplace_back("seed", std::to_string(cfg.seed));

        if (!failure) {
            const double floor = solver.precision_floor();
            const auto points = grid_points(solver.model(), spec.curve_res);
            const auto bounds = solver.probe_many(points, floor);
            std::vector<io::CurveRow> curve;
            for (std::size_t i = 0; i < points.size(); ++i) curve.push_back({points[i], bounds[i].first, bounds[i].second});
            io::write_file_atomic((dir / "curve.csv").string(), io::write_curve(header, curve));

            const double tol = spec.map_tolerance > 0 ? spec.map_tolerance : floor;
            std::vector<io::ActionMapRow> map;
            for (const auto& s : grid_points(solver.model(), spec.map_res)) {
                io::ActionMapRow row{s, {}};
                if (!solver.model().is_target(s) && !solver.model().is_sink(s))
                    for (const auto& a : solver.greedy(s, tol)) row.actions.push_back(label(solver.model(), a));
                map.push_back(std::move(row));
            }
            io::Header mh = header;
            mh.meta.emplace_back("map_tolerance", num(tol));
            io::write_file_atomic((dir / "actionmap.csv").string(), io::write_action_map(mh, map));
            if (spec.snapshot_out && solver.layers() > 0)
                io::write_file_atomic((dir / "snapshot.lrs").string(), io::write_snapshot(solver.store(), solver.model()));
        }
        io::write_file_atomic((dir / "summary.csv").string(), io::write_summary(header, summary));
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall).count();
        io::write_file_atomic((dir / "timing.csv").string(),
                              io::write_summary(io::Header{"", io::kCurrentVersion, {{"seed", std::to_string(cfg.seed)}}},
                                                {{"solver_seconds", num(result.seconds)}, {"total_seconds", num(seconds)}}));
        if (failure) return report(*failure, err, out_dir);
        out << "outcome=" << to_string(result.outcome) << " lower=" << num(result.lower)
            << " upper=" << num(result.upper) << " steps=" << result.steps << "\n";
        return result.outcome == Outcome::budget_exhausted ? kBudget : kOk;
    } catch (const std::exception& e) {
        return report(classify(e), err, out_dir);
    }
}

int validate(const std::string& ref, const models::CatalogOptions& catalog, std::ostream& out, std::ostream& err) {
    try {
        MdpModel model = io::resolve_model(ref, catalog);
        ValidationReport rep = validate_model(model);
        bool finite = true;
        for (const auto& c : model.components) finite = finite && c.box.nondegenerate_axes() == 0;
        if (finite && rep.ok()) {
            FiniteMdp f = models::to_finite(model);
            f.validate();
            rep.notes.push_back("finite model: " + std::to_string(f.size()) + " states, rows sum to 1");
            auto mecs = maximal_end_components(f);
            for (const auto& mec : mecs) {
                std::string states;
                for (auto s : mec) states += (states.empty() ? "" : " ") + std::to_string(s);
                rep.warnings.push_back("absorption: end component {" + states +
                                       "} avoids target and sink; upper bounds there cannot converge");
            }
        }
        out << "model " << model.name << " fingerprint " << model.fingerprint() << "\n";
        for (const auto& e : rep.errors) out << "error: " << e << "\n";
        for (const auto& w : rep.warnings) out << "warning: " << w << "\n";
        for (const auto& n : rep.notes) out << "note: " << n << "\n";
        out << (rep.ok() ? "ok" : "invalid") << "\n";
        if (!rep.ok()) {
            json j{{"error", "invalid-model"}, {"message", rep.errors.front()}, {"errors", rep.errors}};
            err << j.dump() << "\n";
            return kUnsound;
        }
        return kOk;
    } catch (const std::exception& e) {
        return report(classify(e), err, "");
    }
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Anytime maximum-reachability bounds for continuous MDPs", "lipreach"};
    app.require_subcommand(1);

    RunSpec spec;
    std::string mode = "brtdp", sampler = "mixture", wave = "triangle";
    auto add_model_options = [&](CLI::App* c) {
        c->add_option("--model", spec.model, "catalog name, finite-from-file:<path>, model-file:<path>, *.mdp or *.yaml")
            ->required();
        c->add_option("--k", spec.catalog.k, "frequency-chain frequency")->check(CLI::PositiveNumber);
        c->add_option("--wave", wave, "frequency-chain wave")->check(CLI::IsMember({"triangle", "sine"}));
        c->add_flag("--bad-constant", spec.catalog.bad_constant, "frequency-chain with the wrong constant 1");
        c->add_option("--model-seed", spec.catalog.seed, "random-finite seed");
        c->add_option("--states", spec.catalog.states, "random-finite states");
        c->add_option("--actions", spec.catalog.actions, "random-finite actions");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "solve and export trace, curve, action map and summary");
    add_model_options(run_cmd);
    SolverConfig& c = spec.solver;
    run_cmd->add_option("--mode", mode, "vi-lower | brtdp | step-bounded | reach-avoid")
        ->check(CLI::IsMember({"vi-lower", "brtdp", "step-bounded", "reach-avoid"}));
    run_cmd->add_option("--epsilon", c.epsilon, "target gap at the initial state");
    run_cmd->add_option("--xi", c.xi, "vi-lower threshold");
    run_cmd->add_option("--horizon", c.horizon, "step bound");
    run_cmd->add_option("--sampler", sampler, "grid | random | guided | mixture")
        ->check(CLI::IsMember({"grid", "random", "guided", "mixture"}));
    run_cmd->add_option("--nu", c.sampler.nu, "mixture weight of the guided sampler")->check(CLI::Range(0.0, 1.0));
    run_cmd->add_option("--seed", c.seed, "random seed");
    run_cmd->add_option("--max-steps", c.max_steps, "step budget");
    run_cmd->add_option("--max-seconds", c.max_seconds, "wall-clock budget (0: none)");
    run_cmd->add_option("--precision-floor", c.precision_floor, "floor of Precision(t) (0: automatic)");
    run_cmd->add_option("--gamma", spec.gamma, "discount factor applied to the model");
    run_cmd->add_option("--avoid", spec.avoid, "avoid shape, ball:<tag>:<c>:<r> or box:<tag>:<lo>:<hi>");
    run_cmd->add_option("--out", spec.out, "output directory");
    run_cmd->add_option("--curve-res", spec.curve_res, "value-curve points per axis");
    run_cmd->add_option("--map-res", spec.map_res, "action-map points per axis");
    run_cmd->add_option("--map-tolerance", spec.map_tolerance, "greedy tolerance (0: precision floor)");
    run_cmd->add_option("--trace-every", c.trace_every, "trace cadence in steps")->check(CLI::PositiveNumber);
    run_cmd->add_option("--warm-start", spec.snapshot_in, "snapshot to start from");
    run_cmd->add_flag("--snapshot", spec.snapshot_out, "write snapshot.lrs of the final store");
    bool no_grid = false;
    run_cmd->add_flag("--no-grid", no_grid, "disable the envelope grid");

    CLI::App* validate_cmd = app.add_subcommand("validate", "dry-run model checks");
    add_model_options(validate_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        return report({kUsage, {{"error", "usage"}, {"message", e.what()}}}, err, "");
    }
    spec.catalog.wave = wave == "sine" ? models::Wave::sine : models::Wave::triangle;
    if (*validate_cmd) return validate(spec.model, spec.catalog, out, err);
    c.mode = parse_mode(mode);
    c.sampler.kind = parse_sampler(sampler);
    c.use_grid = !no_grid;
    return run(spec, out, err);
}

}  // namespace lipreach::cli
