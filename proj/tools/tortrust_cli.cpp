// tortrust: build worlds, apply trust beliefs, compile and sample belief
// networks, and run path-selection experiments.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "manifest.hpp"
#include "tortrust/bbn.hpp"
#include "tortrust/beliefs.hpp"
#include "tortrust/dataset.hpp"
#include "tortrust/editor.hpp"
#include "tortrust/error.hpp"
#include "tortrust/experiment.hpp"
#include "tortrust/io.hpp"
#include "tortrust/worldgen.hpp"

namespace fs = std::filesystem;
using namespace tortrust;

namespace {

enum Exit : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kViolations = 3,
    kParse = 4,
    kSemantic = 5,
    kIo = 6,
};

/// Violations found by validate/check: reported, not thrown as errors.
struct ViolationsFound {
    std::string report;
};

struct Context {
    std::vector<std::string> argv;
};

std::string fixed(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

/// Writes `text` to `out`, or stdout when `out` is empty.
void emit(const fs::path& out, const std::string& text, cli::RunManifest& m) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    write_file_atomic(out, text);
    m.output(out);
}

Ontology load_ontology(const fs::path& p) { return p.empty() ? default_ontology() : ontology_from_json(load_json(p)); }

BeliefDocument load_beliefs(const fs::path& p) {
    const std::string text = read_file(p);
    try {
        return parse_belief_document(text);
    } catch (const ParseError& e) {
        throw ParseError(p.string() + ":" + e.what());
    }
}

void check_format(const std::string& f) {
    if (f != "csv" && f != "json") throw SemanticError("unknown format '" + f + "' (expected csv or json)");
}

std::vector<NodeId> split_ids(const std::string& s) {
    std::vector<NodeId> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

// world

struct WorldArgs {
    fs::path data, out, world, ontology, params;
    std::uint64_t seed = 0;
    SynthParams synth;
};

void world_commands(CLI::App& app, Context& ctx) {
    auto* world = app.add_subcommand("world", "Generate, build and validate worlds")->require_subcommand(1);
    auto args = std::make_shared<WorldArgs>();

    auto* synth = world->add_subcommand("synth", "Write a seeded synthetic dataset bundle");
    synth->add_option("--seed", args->seed, "Random seed")->required();
    synth->add_option("--out", args->out, "Output bundle directory")->required();
    synth->add_option("--params", args->params, "JSON file of generator parameters")->check(CLI::ExistingFile);
    synth->add_option("--n-as", args->synth.n_as, "Number of ASes");
    synth->add_option("--n-ixp", args->synth.n_ixp, "Number of IXPs");
    synth->add_option("--n-relays", args->synth.n_relays, "Number of relays");
    synth->add_option("--n-relay-as", args->synth.n_relay_as, "Number of ASes hosting relays");
    synth->callback([args, &ctx] {
        cli::RunManifest m(ctx.argv);
        SynthParams p = args->synth;
        if (!args->params.empty()) {
            m.input(args->params);
            p = synth_params_from_json(load_json(args->params));
        }
        m.seed("seed", args->seed);
        save_bundle(generate_synthetic(p, args->seed), args->out);
        m.output(args->out);
        m.write();
    });

    auto* build = world->add_subcommand("build", "Build a world file from a dataset bundle");
    build->add_option("--data", args->data, "Dataset bundle directory")->required()->check(CLI::ExistingDirectory);
    build->add_option("--ontology", args->ontology, "Ontology file (default: built-in)")->check(CLI::ExistingFile);
    build->add_option("--out", args->out, "Output world file");
    build->callback([args, &ctx] {
        cli::RunManifest m(ctx.argv);
        m.input(args->data);
        if (!args->ontology.empty()) m.input(args->ontology);
        const World w = build_world(load_ontology(args->ontology), load_bundle(args->data));
        emit(args->out, dump_json(to_json(w)), m);
        m.write();
    });

    auto* validate = world->add_subcommand("validate", "Check a world against an ontology");
    validate->add_option("--world", args->world, "World file")->required()->check(CLI::ExistingFile);
    validate->add_option("--ontology", args->ontology, "Ontology file (default: built-in)")->check(CLI::ExistingFile);
    validate->callback([args] {
        const Ontology o = load_ontology(args->ontology);
        const ValidationReport report = validate_world(world_from_json(load_json(args->world)), o);
        if (!report.empty()) throw ViolationsFound{format_report(report)};
        std::cerr << "world is valid\n";
    });
}

// beliefs

struct BeliefArgs {
    fs::path world, beliefs, out, ontology;
    double p_org = 0.1, p_fam_max = 0.1, p_fam_min = 0.001;
};

void belief_commands(CLI::App& app, Context& ctx) {
    auto* beliefs = app.add_subcommand("beliefs", "Apply, check and generate belief documents")->require_subcommand(1);
    auto args = std::make_shared<BeliefArgs>();

    auto* apply = beliefs->add_subcommand("apply", "Apply structural, budget and CE beliefs to a world");
    apply->add_option("--world", args->world, "World file")->required()->check(CLI::ExistingFile);
    apply->add_option("--beliefs", args->beliefs, "Belief document")->required()->check(CLI::ExistingFile);
    apply->add_option("--ontology", args->ontology, "Ontology file (default: built-in)")->check(CLI::ExistingFile);
    apply->add_option("--out", args->out, "Output edited-world file");
    apply->callback([args, &ctx] {
        cli::RunManifest m(ctx.argv);
        m.input(args->world);
        m.input(args->beliefs);
        const BeliefDocument doc = load_beliefs(args->beliefs);
        const EditedWorld ew =
            apply_structural(world_from_json(load_json(args->world)), load_ontology(args->ontology), doc);
        emit(args->out, dump_json(to_json(ew)), m);
        m.write();
    });

    auto* check = beliefs->add_subcommand("check", "Parse a belief document and report diagnostics");
    check->add_option("--beliefs", args->beliefs, "Belief document")->required()->check(CLI::ExistingFile);
    check->add_option("--world", args->world, "Also apply the document to this world")->check(CLI::ExistingFile);
    check->callback([args] {
        const BeliefDocument doc = load_beliefs(args->beliefs);
        if (!args->world.empty()) {
            const EditedWorld ew = apply_structural(world_from_json(load_json(args->world)), default_ontology(), doc);
            std::vector<std::string> warnings;
            CompileOptions opts;
            opts.warnings = &warnings;
            compile(ew, doc.trust, doc.scale, opts);
            for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        }
        std::cerr << args->beliefs.string() << ": " << doc.structural.size() << " structural, " << doc.trust.size()
                  << " trust beliefs\n";
    });

    auto* man = beliefs->add_subcommand("the-man", "Generate the pervasive-adversary document for a world");
    man->add_option("--world", args->world, "World file")->required()->check(CLI::ExistingFile);
    man->add_option("--p-org", args->p_org, "Compromise probability of each AS and IXP organization");
    man->add_option("--p-fam-max", args->p_fam_max, "Family probability at zero uptime");
    man->add_option("--p-fam-min", args->p_fam_min, "Family probability at full uptime");
    man->add_option("--out", args->out, "Output belief document");
    man->callback([args, &ctx] {
        cli::RunManifest m(ctx.argv);
        m.input(args->world);
        const World w = world_from_json(load_json(args->world));
        emit(args->out, serialize(build_the_man(w, args->p_org, args->p_fam_max, args->p_fam_min)), m);
        m.write();
    });
}

// bbn

struct BbnArgs {
    fs::path edited, world, beliefs, bbn, out, dump;
    std::string format = "csv", nodes, expr;
    std::size_t n = 100000;
    std::size_t max_nodes = 24;
    std::uint64_t seed = 0;
};

CompiledBbn load_bbn(const fs::path& p, cli::RunManifest& m) {
    m.input(p);
    return compiled_bbn_from_json(load_json(p));
}

std::string marginals_csv(const std::vector<MarginalEstimate>& est) {
    std::string out = "node,estimate,n_samples,standard_error\n";
    for (const auto& e : est)
        out += e.node + "," + fixed(e.estimate) + "," + std::to_string(e.n_samples) + "," + fixed(e.standard_error()) +
               "\n";
    return out;
}

Json marginals_json(const std::vector<MarginalEstimate>& est, std::uint64_t seed) {
    Json rows = Json::array();
    for (const auto& e : est)
        rows.push_back({{"node", e.node},
                        {"estimate", e.estimate},
                        {"n_samples", e.n_samples},
                        {"standard_error", e.standard_error()}});
    return Json{{"seed", seed}, {"marginals", rows}};
}

void bbn_commands(CLI::App& app, Context& ctx) {
    auto* bbn = app.add_subcommand("bbn", "Compile, sample and query belief networks")->require_subcommand(1);
    auto args = std::make_shared<BbnArgs>();

    auto* compile_cmd = bbn->add_subcommand("compile", "Translate an edited world and trust beliefs to a network");
    auto* edited = compile_cmd->add_option("--edited", args->edited, "Edited-world file")->check(CLI::ExistingFile);
    auto* world = compile_cmd->add_option("--world", args->world, "World file; structural beliefs are applied first")
                      ->check(CLI::ExistingFile);
    edited->excludes(world);
    compile_cmd->add_option("--beliefs", args->beliefs, "Belief document")->required()->check(CLI::ExistingFile);
    compile_cmd->add_option("--out", args->out, "Output network file");
    compile_cmd->callback([args, &ctx] {
        if (args->edited.empty() == args->world.empty()) throw CLI::RequiredError("--edited or --world");
        cli::RunManifest m(ctx.argv);
        m.input(args->beliefs);
        const BeliefDocument doc = load_beliefs(args->beliefs);
        EditedWorld ew;
        if (!args->edited.empty()) {
            m.input(args->edited);
            ew = edited_world_from_json(load_json(args->edited));
        } else {
            m.input(args->world);
            ew = apply_structural(world_from_json(load_json(args->world)), default_ontology(), doc);
        }
        std::vector<std::string> warnings;
        CompileOptions opts;
        opts.warnings = &warnings;
        const CompiledBbn b = compile(ew, doc.trust, doc.scale, opts);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        emit(args->out, dump_json(to_json(b)), m);
        m.write();
    });

    auto add_common = [&](CLI::App* cmd, bool random) {
        cmd->add_option("--bbn", args->bbn, "Compiled network file")->required()->check(CLI::ExistingFile);
        cmd->add_option("--format", args->format, "Output format: csv or json");
        cmd->add_option("--out", args->out, "Output file (default: stdout)");
        if (random) {
            cmd->add_option("--seed", args->seed, "Random seed")->required();
            cmd->add_option("--n", args->n, "Number of samples")->check(CLI::PositiveNumber);
        }
    };

    auto* sample_cmd = bbn->add_subcommand("sample", "Draw joint samples");
    add_common(sample_cmd, true);
    sample_cmd->add_option("--dump", args->dump, "Also write a bit-packed binary dump");
    sample_cmd->callback([args, &ctx] {
        check_format(args->format);
        cli::RunManifest m(ctx.argv);
        m.seed("seed", args->seed);
        const CompiledBbn b = load_bbn(args->bbn, m);
        const SampleBatch batch(b, args->n, args->seed);
        std::string text;
        if (args->format == "csv") {
            for (std::size_t i = 0; i < b.size(); ++i) text += (i ? "," : "") + b.node(i).id;
            text += "\n";
            for (std::size_t s = 0; s < batch.n_samples(); ++s) {
                for (std::size_t i = 0; i < b.size(); ++i) {
                    if (i) text += ',';
                    text += batch.get(i, s) ? '1' : '0';
                }
                text += '\n';
            }
        } else {
            Json samples = Json::array();
            for (std::size_t s = 0; s < batch.n_samples(); ++s) {
                std::string bits;
                for (std::size_t i = 0; i < b.size(); ++i) bits += batch.get(i, s) ? '1' : '0';
                samples.push_back(bits);
            }
            Json ids = Json::array();
            for (const auto& n : b.nodes()) ids.push_back(n.id);
            text = dump_json(Json{{"seed", args->seed}, {"nodes", ids}, {"samples", samples}});
        }
        if (!args->dump.empty()) {
            std::ostringstream bin;
            write_sample_dump(bin, batch);
            write_file_atomic(args->dump, bin.str());
            m.output(args->dump);
        }
        emit(args->out, text, m);
        m.write();
    });

    auto* marg = bbn->add_subcommand("marginals", "Estimate marginal compromise probabilities");
    add_common(marg, true);
    marg->add_option("--nodes", args->nodes, "Comma-separated node ids (default: output nodes)");
    marg->callback([args, &ctx] {
        check_format(args->format);
        cli::RunManifest m(ctx.argv);
        m.seed("seed", args->seed);
        const CompiledBbn b = load_bbn(args->bbn, m);
        std::vector<NodeId> nodes = split_ids(args->nodes);
        if (nodes.empty())
            for (const auto& n : b.nodes())
                if (n.is_output) nodes.push_back(n.id);
        const auto est = estimate_marginals(b, nodes, args->n, args->seed);
        emit(args->out, args->format == "csv" ? marginals_csv(est) : dump_json(marginals_json(est, args->seed)), m);
        m.write();
    });

    auto* event = bbn->add_subcommand("event", "Estimate the probability of a boolean event over nodes");
    add_common(event, true);
    event->add_option("--expr", args->expr, "Event expression, e.g. \"g or (l and not x)\"")->required();
    event->callback([args, &ctx] {
        check_format(args->format);
        cli::RunManifest m(ctx.argv);
        m.seed("seed", args->seed);
        const CompiledBbn b = load_bbn(args->bbn, m);
        const double p = estimate_event(b, args->expr, args->n, args->seed);
        const std::string text =
            args->format == "csv"
                ? "event,estimate,n_samples,seed\n\"" + args->expr + "\"," + fixed(p) + "," + std::to_string(args->n) +
                      "," + std::to_string(args->seed) + "\n"
                : dump_json(Json{{"event", args->expr}, {"estimate", p}, {"n_samples", args->n}, {"seed", args->seed}});
        emit(args->out, text, m);
        m.write();
    });

    auto* exact = bbn->add_subcommand("exact", "Exact marginals by full enumeration (small networks only)");
    add_common(exact, false);
    exact->add_option("--max-nodes", args->max_nodes, "Size cap");
    exact->callback([args, &ctx] {
        check_format(args->format);
        cli::RunManifest m(ctx.argv);
        const CompiledBbn b = load_bbn(args->bbn, m);
        const auto marg = exact_marginals(enumerate_exact(b, args->max_nodes), b.size());
        std::string text;
        if (args->format == "csv") {
            text = "node,probability\n";
            for (std::size_t i = 0; i < b.size(); ++i) text += b.node(i).id + "," + fixed(marg[i]) + "\n";
        } else {
            Json rows = Json::array();
            for (std::size_t i = 0; i < b.size(); ++i) rows.push_back({{"node", b.node(i).id}, {"probability", marg[i]}});
            text = dump_json(Json{{"marginals", rows}});
        }
        emit(args->out, text, m);
        m.write();
    });
}

// experiment

struct ExperimentArgs {
    fs::path config, out;
    std::vector<std::string> scenarios;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
};

void experiment_command(CLI::App& app, Context& ctx) {
    auto* exp = app.add_subcommand("experiment", "Run the path-selection scenarios and write the summary table");
    auto args = std::make_shared<ExperimentArgs>();
    exp->add_option("--config", args->config, "Experiment config file")->required()->check(CLI::ExistingFile);
    exp->add_option("--out", args->out, "Output table (default: stdout)");
    exp->add_option("--scenario", args->scenarios, "Restrict to these scenarios (repeatable)");
    exp->add_option("--format", args->format, "Output format: csv or json");
    exp->add_option("--seed", args->seed, "Override the config seed");
    exp->add_option("--n", args->n, "Override the config sample count")->check(CLI::PositiveNumber);
    exp->callback([args, &ctx] {
        check_format(args->format);
        cli::RunManifest m(ctx.argv);
        m.input(args->config);
        ExperimentConfig cfg = load_experiment_config(args->config);
        if (!args->scenarios.empty()) cfg.scenarios = args->scenarios;
        if (args->seed) cfg.seed = *args->seed;
        if (args->n) cfg.n_samples = *args->n;
        m.input(cfg.world);
        m.input(cfg.adversary);
        m.seed("seed", cfg.seed);
        const ExperimentTable t = run_experiment(cfg);
        std::string text;
        if (args->format == "csv") {
            text = to_csv(t);
        } else {
            Json rows = Json::array();
            for (const auto& r : t.rows)
                rows.push_back({{"scenario", r.scenario},
                                {"mean", r.mean},
                                {"median", r.median},
                                {"min", r.min},
                                {"max", r.max},
                                {"n_samples", r.n_samples},
                                {"seed", r.seed},
                                {"per_client", r.per_client}});
            text = dump_json(Json{{"rows", rows}});
        }
        emit(args->out, text, m);
        m.write();
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trust-aware Tor path selection: worlds, beliefs, belief networks and experiments", "tortrust"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "tortrust 0.1.0");
    Context ctx{std::vector<std::string>(argv, argv + argc)};
    world_commands(app, ctx);
    belief_commands(app, ctx);
    bbn_commands(app, ctx);
    experiment_command(app, ctx);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    } catch (const ViolationsFound& v) {
        std::cerr << v.report;
        return kViolations;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParse;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kViolations;
    } catch (const SemanticError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kSemantic;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
