#pragma once

#include "gazenet/metrics.hpp"
#include "gazenet/stats.hpp"
#include "gazenet/tsc.hpp"
#include "gazenet/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gazenet::pipeline {

enum class EigenFailurePolicy { error, zero_flag };

// One structured key-value config file plus CLI flag overrides (flags win).
// A single root seed drives every randomized stage and is recorded in each
// output header.
struct PipelineConfig {
    std::string fixations_path;
    std::string outcomes_path;
    std::string out_dir = ".";

    CollapsePolicy collapse = CollapsePolicy::merge;
    PiSource pi_source = PiSource::counts;
    double pagerank_damping = 0.85;
    double pagerank_tol = 1e-10;
    int pagerank_max_iter = 200;
    double eigen_tol = 1e-10;
    int eigen_max_iter = 1000;
    EigenFailurePolicy eigen_failure = EigenFailurePolicy::error;
    bool export_node_link = false;

    int k_fixed = 0; // 0 = auto (select_k over k_candidates)
    std::vector<int> k_candidates = {2, 3};
    int restarts = 10;
    int kmeans_max_iter = 50;
    std::optional<int> band;
    int dba_max_iter = 30;
    double dba_tol = 1e-6;
    tsc::NormalizeMode normalize = tsc::NormalizeMode::zscore;

    std::vector<std::string> drop_predictors;
    bool standardize = false;
    double lmm_tol = 1e-8;
    int lmm_max_iter = 500;

    std::uint64_t seed = 42;
    int jobs = 1;

    // synth subcommand
    int synth_participants = 12;
    std::vector<int> synth_semesters = {6, 7};
    int synth_sessions = 2;
    int synth_opts = 10;
    int synth_aois = 8;
    int synth_steps_min = 30;
    int synth_steps_max = 90;
    int synth_groups = 2;
    double synth_bfd_noise = 0.04;

    void validate() const;
    metrics::ComputeConfig compute_config() const;
    tsc::KmeansOptions kmeans_options(std::uint64_t metric_seed) const;
};

PipelineConfig parse_config_file(const std::string& path);
void apply_config_line(PipelineConfig& cfg, const std::string& key, const std::string& value);

// Stage entry points; they throw (ValidationError / NumericalError) on
// failure, and no partial outputs are left behind.
void cmd_metrics(const PipelineConfig& cfg);
void cmd_cluster(const PipelineConfig& cfg);
void cmd_anova(const PipelineConfig& cfg);
void cmd_lmm(const PipelineConfig& cfg);
void cmd_synth(const PipelineConfig& cfg);
void cmd_pipeline(const PipelineConfig& cfg); // metrics -> cluster -> anova -> lmm

// metrics.csv row (also the LMM input after joining outcomes).
struct MetricRow {
    TrialKey key;
    metrics::MetricVector mv;
};
std::vector<MetricRow> read_metrics_csv(const std::string& path);

// Simple index-sliced thread pool; results must be written to preallocated
// slots so output is schedule-independent.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

} // namespace gazenet::pipeline
