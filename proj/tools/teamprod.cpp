// Command-line driver for the pipeline stages and the synthetic generators.
#include <teamprod/pipeline.hpp>
#include <teamprod/synthkit/generators.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

namespace pl = teamprod::pipeline;
namespace sk = teamprod::synthkit;

enum Exit { ok = 0, usage = 1, data = 2, internal = 3 };

struct StageFlags {
    std::string config = "pipeline.conf";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    bool force = false;
};

void add_stage_flags(CLI::App* cmd, StageFlags& f) {
    cmd->add_option("--config", f.config, "pipeline configuration file")->capture_default_str();
    cmd->add_option("--seed", f.seed, "override the sampling seed");
    cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--force", f.force, "rerun even when the configuration changed");
}

int run_stages(const StageFlags& f, std::optional<pl::Stage> only) {
    auto cfg = pl::PipelineConfig::load(f.config);
    if (f.seed) {
        cfg.seed = *f.seed;
        cfg.raw.set("seed", std::to_string(*f.seed));
    }
    if (f.jobs) cfg.jobs = *f.jobs;
    pl::RunOptions opt;
    opt.force = f.force;
    if (only)
        pl::run_stage(*only, cfg, opt);
    else
        pl::run_all(cfg, opt);
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Team productivity mining pipeline"};
    app.require_subcommand(1);

    StageFlags flags;
    std::optional<pl::Stage> chosen;
    for (auto s : pl::all_stages) {
        auto* cmd = app.add_subcommand(std::string(pl::to_string(s)), "run the " + std::string(pl::to_string(s)) + " stage");
        add_stage_flags(cmd, flags);
        cmd->callback([&chosen, s] { chosen = s; });
    }
    auto* all = app.add_subcommand("all", "run every stage in order");
    add_stage_flags(all, flags);

    auto* synth = app.add_subcommand("synth", "synthetic data generators");
    synth->require_subcommand(1);
    std::string plan_file, spec_file, out;
    int projects = 12;
    std::uint64_t corpus_seed = 2024;
    auto* repo = synth->add_subcommand("repo", "repository dump with planted truth");
    repo->add_option("--plan", plan_file, "plan file")->required();
    repo->add_option("--out", out, "output directory")->required();
    auto* simpson = synth->add_subcommand("simpson", "Simpson's-paradox observation table");
    simpson->add_option("--spec", spec_file, "group spec file (defaults when omitted)");
    simpson->add_option("--out", out, "output CSV")->required();
    auto* corpus = synth->add_subcommand("corpus", "mini corpus with catalog and config");
    corpus->add_option("--out", out, "output directory")->required();
    corpus->add_option("--projects", projects, "number of generated projects")->check(CLI::Range(3, 200));
    corpus->add_option("--seed", corpus_seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try {
        if (*all) return run_stages(flags, std::nullopt);
        if (chosen) return run_stages(flags, chosen);
        if (*repo) {
            auto plan = sk::SyntheticPlan::from_kv(
                teamprod::kv::Document::parse(teamprod::fs::read_file(plan_file), plan_file));
            auto generated = sk::gen_synthetic_repo(plan);
            sk::write_synthetic_repo(generated, out);
            std::cerr << "wrote " << generated.commits.size() << " commits for " << generated.truth.project_id << "\n";
            return ok;
        }
        if (*simpson) {
            sk::SimpsonSpec spec;
            if (!spec_file.empty())
                spec = sk::SimpsonSpec::from_kv(
                    teamprod::kv::Document::parse(teamprod::fs::read_file(spec_file), spec_file));
            teamprod::fs::write_file_atomic(out, sk::write_frame_csv(sk::gen_simpson_dataset(spec)));
            return ok;
        }
        if (*corpus) {
            sk::gen_mini_corpus(out, projects, corpus_seed);
            return ok;
        }
    } catch (const teamprod::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == teamprod::ErrorKind::internal ? internal : data;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return internal;
    }
    return usage;
}
