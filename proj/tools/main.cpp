// Command-line front end: analyze | train | scan | gencheck | verify.
#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "lscape/io.hpp"

using namespace lscape;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerdict = 1;
constexpr int kExitInput = 2;
constexpr int kExitBudget = 3;

struct GlobalFlags {
    std::uint64_t seed = 0;
    double tol = kDefaultTau;
    bool strict = false;
    std::string out_dir;
};

void emit(const json& report, const GlobalFlags& g, const std::string& name) {
    std::cout << report.dump(2) << "\n";
    if (!g.out_dir.empty()) {
        std::filesystem::create_directories(g.out_dir);
        write_json(report, g.out_dir + "/" + name);
    }
}

json run_metadata(const GlobalFlags& g) {
    json meta;
    meta["seed"] = g.seed;
    meta["tau"] = g.tol;
    meta["format_version"] = 1;
    return meta;
}

json analyze_point(const Params& p, const LabeledDataset& data, const GlobalFlags& g,
                   bool* verdict_failed) {
    json out;
    out["loss"] = total_loss(p, data);

    Signature sig = signature(p, data, g.tol);
    out["signature"] = {{"zero_count", sig.zero_count()}, {"width", sig.width}};
    CellQuery q = cell_of(p, data, g.tol);
    if (q.cell) {
        out["cell_hash"] = q.cell->hash;
    } else {
        json zs = json::array();
        for (const auto& z : q.report->zeros)
            zs.push_back({{"point", z.point}, {"layer", z.layer}, {"index", z.index}});
        out["boundary"] = {{"zeros", zs}, {"degenerate", q.report->degenerate}};
    }

    CriticalityResult crit = is_critical(p, data, -1.0, g.tol);
    out["clarke"] = {{"residual_norm", crit.certificate.residual_norm},
                     {"critical", crit.critical},
                     {"eps_crit", crit.eps_used},
                     {"cells", crit.certificate.cells.size()}};

    ClassifyOptions copts;
    copts.tau = g.tol;
    copts.seed = g.seed + 7;
    MinimumClassification cls = classify_minimum(p, data, copts);
    out["classification"] = {{"kind", to_string(cls.kind)}, {"detail", cls.detail}};

    json verdicts;
    bool failed = false;
    if (data.mode == LabelMode::Binary) {
        auto hp = separability(data);
        out["separable"] = hp.has_value();
        if (hp) out["margin"] = hp->margin;
        if (p.shape.depth() == 1 && hp && crit.critical) {
            if (p.shape.alpha > 0.0 && p.shape.alpha < 1.0) {
                Verdict v = leaky_critical_check(p, data, crit);
                verdicts["leaky_critical"] = {{"passed", v.passed}, {"detail", v.detail}};
                failed = failed || !v.passed;
            }
            if (p.shape.alpha == 0.0) {
                BlindSideReport v = blind_side_check(p, data, crit, g.tol);
                json viols = json::array();
                for (const auto& viol : v.violations)
                    viols.push_back({{"point", viol.point},
                                     {"unit", viol.unit},
                                     {"preactivation", viol.preactivation}});
                verdicts["blind_side"] = {{"passed", v.passed}, {"violations", viols}};
                failed = failed || !v.passed;
            }
        }
        if (p.shape.alpha == 1.0 && crit.critical) {
            Verdict v = deep_linear_check(p, data, crit, g.seed + 13);
            verdicts["deep_linear"] = {{"passed", v.passed}, {"detail", v.detail}};
            failed = failed || !v.passed;
        }
    }
    out["verdicts"] = std::move(verdicts);
    if (verdict_failed) *verdict_failed = failed;
    return out;
}

int cmd_analyze(const std::string& data_path, const std::string& params_path,
                const GlobalFlags& g) {
    LabeledDataset data = load_dataset(data_path);
    Params p = load_params(params_path);
    bool failed = false;
    json report;
    report["command"] = "analyze";
    report["meta"] = run_metadata(g);
    report["inputs"] = {{"dataset", data_path}, {"params", params_path}};
    report["result"] = analyze_point(p, data, g, &failed);
    report["digest"] = report_digest(report);
    emit(report, g, "analyze_report.json");
    return g.strict && failed ? kExitVerdict : kExitOk;
}

int cmd_train(const std::string& data_path, const std::string& config_path,
              const std::vector<std::string>& overrides, const GlobalFlags& g) {
    LabeledDataset data = load_dataset(data_path);
    TrainConfig cfg = load_config(config_path, overrides);
    if (g.seed != 0) cfg.seed = g.seed;

    NetworkShape shape;
    shape.input_dim = data.dim();
    shape.hidden = cfg.hidden;
    shape.alpha = cfg.alpha;
    shape.output_bias = cfg.output_bias;
    ObjectiveKind kind;
    if (cfg.mode == "binary") {
        if (data.mode != LabelMode::Binary) throw parse_error("binary config needs binary data");
        shape.output_dim = 1;
        kind = ObjectiveKind::Binary;
    } else {
        if (data.mode != LabelMode::MultiClass)
            throw parse_error(cfg.mode + " config needs multiclass data");
        shape.output_dim = data.num_classes;
        kind = cfg.mode == "penalty" ? ObjectiveKind::Penalty : ObjectiveKind::Multiclass;
    }

    MultiStartOptions mopts;
    mopts.descent.schedule = cfg.schedule;
    mopts.descent.max_iters = cfg.max_iters;
    mopts.descent.check_every = cfg.check_every;
    mopts.descent.eps_crit = cfg.eps_crit;
    mopts.n_starts = cfg.starts;
    mopts.init_scale = cfg.init_scale;
    mopts.seed = cfg.seed;
    std::vector<Trajectory> runs = multi_start(kind, data, shape, cfg.gamma, mopts);

    json report;
    report["command"] = "train";
    report["meta"] = run_metadata(g);
    report["inputs"] = {{"dataset", data_path}, {"config", config_path}};
    report["config"] = config_to_json(cfg);
    report["config_digest"] = report_digest(config_to_json(cfg));

    std::string dir = g.out_dir.empty() ? "." : g.out_dir;
    std::filesystem::create_directories(dir);
    json runs_json = json::array();
    for (size_t i = 0; i < runs.size(); ++i) {
        const Trajectory& t = runs[i];
        json r;
        r["final_loss"] = t.final_loss;
        r["iters"] = t.iters;
        r["early_stopped"] = t.early_stopped;
        r["diverged"] = t.diverged;
        r["final_residual"] = t.final_residual;
        r["trajectory_digest"] = t.digest();
        json occ = json::array();
        for (const auto& [hash, frac] : t.occupancy())
            occ.push_back({{"cell_hash", hash}, {"fraction", frac}});
        r["occupancy"] = std::move(occ);

        char name[64];
        std::snprintf(name, sizeof name, "params_%03zu.json", i);
        if (std::holds_alternative<Params>(t.final_params)) {
            const Params& fp = std::get<Params>(t.final_params);
            write_json(params_to_json(fp), dir + "/" + name);
            CriticalityResult crit = is_critical(fp, data, cfg.eps_crit);
            r["critical"] = crit.critical;
            r["residual_norm"] = crit.certificate.residual_norm;
            if (data.mode == LabelMode::Binary && fp.shape.depth() == 1 && crit.critical) {
                auto hp = separability(data);
                if (hp && fp.shape.alpha > 0.0 && fp.shape.alpha < 1.0) {
                    Verdict v = leaky_critical_check(fp, data, crit);
                    r["leaky_critical"] = {{"passed", v.passed}, {"detail", v.detail}};
                }
                if (hp && fp.shape.alpha == 0.0) {
                    BlindSideReport v = blind_side_check(fp, data, crit, g.tol);
                    r["blind_side"] = {{"passed", v.passed},
                                       {"violations", v.violations.size()}};
                }
            }
            if (data.mode == LabelMode::Binary && fp.shape.alpha == 1.0 && crit.critical) {
                Verdict v = deep_linear_check(fp, data, crit, cfg.seed + 13);
                r["deep_linear"] = {{"passed", v.passed}, {"detail", v.detail}};
            }
        } else {
            const ReplicatedParams& rp = std::get<ReplicatedParams>(t.final_params);
            write_json(replicated_to_json(rp), dir + "/" + name);
            if (t.penalty_certificate && t.penalty_certificate->critical) {
                ExactnessReport ex =
                    penalty_exactness_check(rp, data, *t.penalty_certificate, 1e-5);
                r["penalty_exactness"] = {{"passed", ex.passed},
                                          {"max_replica_deviation", ex.max_deviation},
                                          {"deviation_tol", ex.deviation_tol},
                                          {"per_class_residuals", ex.per_class_residuals}};
                r["ova_loss_at_mean"] = [&] {
                    double s = 0.0;
                    for (int cls = 0; cls < rp.num_classes(); ++cls)
                        s += total_loss(rp.mean_class_params(cls), one_vs_rest(data, cls));
                    return s;
                }();
                if (rp.shape.alpha == 0.0 && rp.shape.depth() == 1) {
                    bool sep = true;
                    for (int cls = 0; cls < rp.num_classes(); ++cls)
                        sep = sep && separability(one_vs_rest(data, cls)).has_value();
                    if (sep) {
                        MulticlassBlindSideReport mb =
                            multiclass_blind_side_check(rp, data, *t.penalty_certificate);
                        r["multiclass_blind_side"] = {{"passed", mb.passed},
                                                      {"violations", mb.violations.size()}};
                    }
                }
            }
        }
        r["archived_params"] = std::string(name);
        runs_json.push_back(std::move(r));
    }
    report["runs"] = std::move(runs_json);
    report["best_loss"] = runs.front().final_loss;
    if (std::holds_alternative<Params>(runs.front().final_params))
        write_json(params_to_json(std::get<Params>(runs.front().final_params)),
                   dir + "/best_params.json");
    else
        write_json(replicated_to_json(std::get<ReplicatedParams>(runs.front().final_params)),
                   dir + "/best_params.json");
    report["digest"] = report_digest(report);
    emit(report, g, "train_report.json");
    return kExitOk;
}

// axis name format: W<layer>[i][j] | b<layer>[i] | V[r][j] | c[r]
struct Axis {
    enum class Field { W, B, V, C } field;
    int layer = 0, i = 0, j = 0;
};

Axis parse_axis(const std::string& s) {
    Axis a;
    size_t pos = 0;
    if (s.empty()) throw parse_error("empty axis name");
    char f = s[0];
    if (f == 'W' || f == 'b') {
        pos = 1;
        size_t br = s.find('[', pos);
        if (br == std::string::npos || br == pos) throw parse_error("axis needs a layer: " + s);
        a.layer = std::stoi(s.substr(pos, br - pos));
        pos = br;
    } else if (f == 'V' || f == 'c') {
        pos = 1;
    } else {
        throw parse_error("axis must name W<l>, b<l>, V or c: " + s);
    }
    auto read_index = [&](const char* what) {
        if (pos >= s.size() || s[pos] != '[') throw parse_error(std::string("expected [") + what + "] in " + s);
        size_t close = s.find(']', pos);
        if (close == std::string::npos) throw parse_error("unclosed bracket in " + s);
        int v = std::stoi(s.substr(pos + 1, close - pos - 1));
        pos = close + 1;
        return v;
    };
    switch (f) {
        case 'W':
            a.field = Axis::Field::W;
            a.i = read_index("row");
            a.j = read_index("col");
            break;
        case 'b':
            a.field = Axis::Field::B;
            a.i = read_index("row");
            break;
        case 'V':
            a.field = Axis::Field::V;
            a.i = read_index("row");
            a.j = read_index("col");
            break;
        default:
            a.field = Axis::Field::C;
            a.i = read_index("row");
            break;
    }
    if (pos != s.size()) throw parse_error("trailing characters in axis " + s);
    return a;
}

double* axis_ref(Params& p, const Axis& a) {
    switch (a.field) {
        case Axis::Field::W: {
            if (a.layer < 1 || a.layer > p.shape.depth()) throw parse_error("axis layer out of range");
            Matrix& m = p.W[a.layer - 1];
            if (a.i < 0 || a.i >= m.rows || a.j < 0 || a.j >= m.cols)
                throw parse_error("axis index out of range");
            return &m(a.i, a.j);
        }
        case Axis::Field::B: {
            if (a.layer < 1 || a.layer > p.shape.depth()) throw parse_error("axis layer out of range");
            Vec& v = p.b[a.layer - 1];
            if (a.i < 0 || a.i >= int(v.size())) throw parse_error("axis index out of range");
            return &v[a.i];
        }
        case Axis::Field::V: {
            if (a.i < 0 || a.i >= p.V.rows || a.j < 0 || a.j >= p.V.cols)
                throw parse_error("axis index out of range");
            return &p.V(a.i, a.j);
        }
        default: {
            if (a.i < 0 || a.i >= int(p.c.size())) throw parse_error("axis index out of range");
            if (!p.shape.output_bias) throw parse_error("c is not a parameter of this network");
            return &p.c[a.i];
        }
    }
}

int cmd_scan(const std::string& data_path, const std::string& params_path,
             const std::string& axis1, const std::string& axis2, int grid, double range,
             const std::string& out_file, const GlobalFlags& g) {
    LabeledDataset data = load_dataset(data_path);
    Params base = load_params(params_path);
    Axis a1 = parse_axis(axis1), a2 = parse_axis(axis2);
    {
        Params probe = base;
        axis_ref(probe, a1);
        axis_ref(probe, a2);
    }
    double c1 = *axis_ref(base, a1);
    double c2 = *axis_ref(base, a2);

    std::vector<std::string> lines(size_t(grid) * grid);
    parallel_for(grid * grid, [&](int idx) {
        int r = idx / grid, cidx = idx % grid;
        double t1 = grid == 1 ? 0.0 : -range + 2.0 * range * r / (grid - 1);
        double t2 = grid == 1 ? 0.0 : -range + 2.0 * range * cidx / (grid - 1);
        Params p = base;
        *axis_ref(p, a1) = c1 + t1;
        *axis_ref(p, a2) = c2 + t2;
        double loss = total_loss(p, data);
        Signature sig = signature(p, data, g.tol);
        std::vector<std::int8_t> signs = sig.s;
        for (std::int8_t& v : signs)
            if (v == 0) v = 1;
        CellId u = cell_from_signs(std::move(signs));
        char buf[128];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%llu,%d", t1, t2, loss,
                      static_cast<unsigned long long>(u.hash), sig.zero_count());
        lines[idx] = buf;
    });

    std::ofstream out(out_file);
    if (!out) throw parse_error("cannot write " + out_file);
    out << "t1,t2,loss,cell_hash,zero_count\n";
    for (const std::string& l : lines) out << l << "\n";
    std::cout << "wrote " << grid * grid << " grid points to " << out_file << "\n";
    return kExitOk;
}

int cmd_gencheck(const std::string& data_path, double alpha, int depth, const GlobalFlags& g) {
    LabeledDataset data = load_dataset(data_path);
    GenericityVerdict v = genericity(data, alpha, depth);
    json report;
    report["command"] = "gencheck";
    report["meta"] = run_metadata(g);
    report["inputs"] = {{"dataset", data_path}, {"alpha", alpha}, {"depth", depth}};
    report["generic"] = v.generic;
    if (!v.generic) {
        // re-verify the witness before emitting it
        LabeledDataset oh = data;
        if (data.mode == LabelMode::Binary) {
            oh.mode = LabelMode::MultiClass;
            oh.num_classes = 2;
            for (int i = 0; i < oh.size(); ++i) oh.labels[i] = data.label_sign(i) > 0 ? 0 : 1;
        }
        MomentBalance mb = error_moment_residuals(oh, v.witness->eps, v.witness->lambdas);
        if (mb.vector_family > 1e-10 || mb.slope_family > 1e-10)
            throw std::logic_error("rare witness failed re-verification");
        json eps = json::array();
        for (int i = 0; i < v.witness->eps.rows; ++i) {
            json row = json::array();
            for (int r = 0; r < v.witness->eps.cols; ++r) row.push_back(v.witness->eps(i, r));
            eps.push_back(std::move(row));
        }
        report["witness"] = {{"lambdas", v.witness->lambdas},
                             {"eps", std::move(eps)},
                             {"residual_vector_family", mb.vector_family},
                             {"residual_slope_family", mb.slope_family}};
    }
    report["digest"] = report_digest(report);
    emit(report, g, "gencheck_report.json");
    return kExitOk;
}

int cmd_verify(const std::string& report_path, const GlobalFlags& g) {
    json report = read_json(report_path);
    std::string cmd = report.value("command", "");
    std::filesystem::path base = std::filesystem::path(report_path).parent_path();
    int mismatches = 0;
    auto check_close = [&](const char* what, double a, double b, double tol) {
        if (std::fabs(a - b) > tol) {
            std::cout << "MISMATCH " << what << ": recorded " << a << " recomputed " << b << "\n";
            ++mismatches;
        }
    };
    if (cmd == "analyze") {
        LabeledDataset data = load_dataset(report.at("inputs").at("dataset").get<std::string>());
        Params p = load_params(report.at("inputs").at("params").get<std::string>());
        GlobalFlags g2 = g;
        g2.seed = report.at("meta").at("seed").get<std::uint64_t>();
        g2.tol = report.at("meta").at("tau").get<double>();
        json redo = analyze_point(p, data, g2, nullptr);
        check_close("loss", report.at("result").at("loss").get<double>(),
                    redo.at("loss").get<double>(), 1e-12);
        check_close("clarke.residual_norm",
                    report.at("result").at("clarke").at("residual_norm").get<double>(),
                    redo.at("clarke").at("residual_norm").get<double>(), 1e-9);
        if (report.at("result").at("classification").at("kind") !=
            redo.at("classification").at("kind")) {
            std::cout << "MISMATCH classification kind\n";
            ++mismatches;
        }
    } else if (cmd == "train") {
        LabeledDataset data = load_dataset(report.at("inputs").at("dataset").get<std::string>());
        for (const auto& run : report.at("runs")) {
            std::string params_file = (base / run.at("archived_params").get<std::string>()).string();
            json pj = read_json(params_file);
            double recorded = run.at("final_loss").get<double>();
            double recomputed;
            if (pj.contains("replicas")) {
                ReplicatedParams rp = replicated_from_json(pj);
                recomputed = penalized_loss(rp, data);
            } else {
                recomputed = total_loss(params_from_json(pj), data);
            }
            check_close("run final_loss", recorded, recomputed, 1e-12);
        }
    } else if (cmd == "gencheck") {
        const auto& in = report.at("inputs");
        LabeledDataset data = load_dataset(in.at("dataset").get<std::string>());
        GenericityVerdict v =
            genericity(data, in.at("alpha").get<double>(), in.at("depth").get<int>());
        if (v.generic != report.at("generic").get<bool>()) {
            std::cout << "MISMATCH genericity verdict\n";
            ++mismatches;
        }
    } else {
        std::cout << "unknown or unverifiable report command '" << cmd << "'\n";
        return kExitInput;
    }
    if (mismatches == 0) {
        std::cout << "verify: all recorded verdicts recomputed identically\n";
        return kExitOk;
    }
    return kExitVerdict;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cell structure, Clarke criticality and landscape analysis for hinge-loss ReLU networks"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags are accepted after the subcommand too

    GlobalFlags g;
    app.add_option("--seed", g.seed, "global random seed");
    app.add_option("--tol", g.tol, "zero-detection half-width for signatures");
    app.add_flag("--strict", g.strict, "exit 1 when an applicable verdict fails");
    app.add_option("--out", g.out_dir, "output directory for reports and archives");

    std::string data_path, params_path, config_path, axis1, axis2, out_file, report_path;
    std::vector<std::string> overrides;
    int grid = 41;
    double range = 1.0, alpha = 0.25;
    int depth = 1;

    CLI::App* analyze = app.add_subcommand("analyze", "loss, cell, criticality and verdicts at a point");
    analyze->add_option("--data", data_path, "dataset file (csv or json)")->required();
    analyze->add_option("--params", params_path, "network parameters (json)")->required();

    CLI::App* train = app.add_subcommand("train", "multi-start subgradient descent");
    train->add_option("--data", data_path, "dataset file")->required();
    train->add_option("--config", config_path, "training configuration (json)")->required();
    train->add_option("--set", overrides, "config overrides key=value");

    CLI::App* scan = app.add_subcommand("scan", "loss/cell grid over a 2d parameter slice");
    scan->add_option("--data", data_path, "dataset file")->required();
    scan->add_option("--params", params_path, "network parameters (json)")->required();
    scan->add_option("--axis1", axis1, "first coordinate, e.g. W1[0][0]")->required();
    scan->add_option("--axis2", axis2, "second coordinate, e.g. b1[0]")->required();
    scan->add_option("--grid", grid, "grid resolution per axis");
    scan->add_option("--range", range, "half-width of the scan around the archived values");
    scan->add_option("--out-file", out_file, "output csv path")->required();

    CLI::App* gencheck = app.add_subcommand("gencheck", "generic/rare data oracle");
    gencheck->add_option("--data", data_path, "dataset file")->required();
    gencheck->add_option("--alpha", alpha, "leak slope");
    gencheck->add_option("--depth", depth, "hidden layer count");

    CLI::App* verify = app.add_subcommand("verify", "recompute a report's numeric verdicts");
    verify->add_option("--report", report_path, "report json produced by analyze/train/gencheck")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(analyze)) return cmd_analyze(data_path, params_path, g);
        if (app.got_subcommand(train)) return cmd_train(data_path, config_path, overrides, g);
        if (app.got_subcommand(scan))
            return cmd_scan(data_path, params_path, axis1, axis2, grid, range, out_file, g);
        if (app.got_subcommand(gencheck)) return cmd_gencheck(data_path, alpha, depth, g);
        if (app.got_subcommand(verify)) return cmd_verify(report_path, g);
    } catch (const budget_exceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBudget;
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const shape_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
