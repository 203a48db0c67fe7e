#include "gazenet/error.hpp"
#include "gazenet/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using gazenet::pipeline::PipelineConfig;

// Flag values land in optionals first so that "flags win over the config file"
// holds without clobbering file-provided settings with defaults.
struct FlagOverrides {
    std::optional<std::string> fixations, outcomes, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    bool keep_self_loops = false;
    std::optional<std::string> pi_source, k, normalize;
    std::vector<std::string> drop_predictors;

    void apply(PipelineConfig& cfg) const {
        using gazenet::pipeline::apply_config_line;
        if (fixations) cfg.fixations_path = *fixations;
        if (outcomes) cfg.outcomes_path = *outcomes;
        if (out_dir) cfg.out_dir = *out_dir;
        if (seed) cfg.seed = *seed;
        if (jobs) cfg.jobs = *jobs;
        if (keep_self_loops) apply_config_line(cfg, "keep_self_loops", "true");
        if (pi_source) apply_config_line(cfg, "pi_source", *pi_source);
        if (k) apply_config_line(cfg, "k", *k);
        if (normalize) apply_config_line(cfg, "normalize", *normalize);
        if (!drop_predictors.empty()) cfg.drop_predictors = drop_predictors;
    }
};

void add_common_flags(CLI::App* cmd, FlagOverrides& f, std::string& config_path) {
    cmd->add_option("--config", config_path, "key = value config file");
    cmd->add_option("--fixations", f.fixations, "fixations.csv path");
    cmd->add_option("--outcomes", f.outcomes, "outcomes.csv path");
    cmd->add_option("--out-dir", f.out_dir, "output directory");
    cmd->add_option("--seed", f.seed, "root seed (recorded in every output)");
    cmd->add_option("--jobs", f.jobs, "worker threads for per-trial/per-metric work");
    cmd->add_flag("--keep-self-loops", f.keep_self_loops,
                  "keep consecutive same-AOI transitions as self-loop edges");
    cmd->add_option("--pi-source", f.pi_source,
                    "stationary distribution source: counts|durations");
    cmd->add_option("--k", f.k, "cluster count: auto or a fixed 2..10");
    cmd->add_option("--normalize", f.normalize, "series normalization: zscore|minmax");
    cmd->add_option("--drop-predictor", f.drop_predictors,
                    "drop a fixed-effect predictor (repeatable)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gazenet: AOI scanpath networks, metric trajectories, clustering and "
                 "mixed-model analysis"};
    app.require_subcommand(1);

    struct Sub {
        CLI::App* cmd;
        FlagOverrides flags;
        std::string config_path;
        void (*run)(const PipelineConfig&);
    };
    std::vector<Sub> subs;
    subs.reserve(8); // CLI11 keeps pointers into the elements
    auto add = [&](const char* name, const char* desc, void (*run)(const PipelineConfig&)) {
        subs.push_back({app.add_subcommand(name, desc), {}, {}, run});
        add_common_flags(subs.back().cmd, subs.back().flags, subs.back().config_path);
    };
    add("metrics", "compute per-trial network metrics -> metrics.csv",
        gazenet::pipeline::cmd_metrics);
    add("cluster", "DTW k-means over per-participant metric trajectories",
        gazenet::pipeline::cmd_cluster);
    add("anova", "compare mean BFD across clusters -> anova.csv",
        gazenet::pipeline::cmd_anova);
    add("lmm", "REML mixed model predicting BFD from metrics -> lmm.csv",
        gazenet::pipeline::cmd_lmm);
    add("synth", "emit a ground-truthed synthetic cohort", gazenet::pipeline::cmd_synth);
    add("pipeline", "metrics -> cluster -> anova -> lmm", gazenet::pipeline::cmd_pipeline);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // CLI11 prints help/usage messages
        return code == 0 ? 0 : 1;     // usage errors are exit 1
    }

    for (auto& sub : subs) {
        if (!sub.cmd->parsed()) continue;
        try {
            PipelineConfig cfg;
            if (!sub.config_path.empty())
                cfg = gazenet::pipeline::parse_config_file(sub.config_path);
            sub.flags.apply(cfg);
            sub.run(cfg);
        } catch (const gazenet::NumericalError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 3;
        } catch (const gazenet::ValidationError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 3;
        }
    }
    return 0;
}
