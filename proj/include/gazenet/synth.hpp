#pragma once

#include "gazenet/rng.hpp"
#include "gazenet/tsc.hpp"
#include "gazenet/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gazenet::synth {

// Markov scanpath source over a fixed AOI set. All generators are
// deterministic per seed.
struct ScanpathGenerator {
    int aoi_count = 0;
    std::vector<std::vector<double>> P; // row-stochastic
    std::vector<double> initial;        // defaults to uniform when empty
    int steps = 1;
    std::uint64_t seed = 0;
};

// AOI ids "a00", "a01", ...: zero-padded so lexicographic order matches index
// order everywhere downstream.
std::string aoi_label(int index);
int aoi_index(const std::string& label);

void validate_chain(const std::vector<std::vector<double>>& P);

std::vector<std::string> markov_scanpath(const ScanpathGenerator& gen);

// Trial t is sampled from the blended chain (1-s_t) P_novice + s_t P_expert.
std::vector<std::vector<std::string>> expertise_trajectory(
    const std::vector<std::vector<double>>& novice,
    const std::vector<std::vector<double>>& expert, int trials,
    std::span<const double> schedule, std::uint64_t seed, int steps);

// Expected transition entropy of the analyzed (self-loops merged) chain: the
// observed jump process conditions on leaving the current AOI, so the oracle
// is H = -sum_i pi_i sum_{j != i} [P_ij/(1-P_ii)] ln[P_ij/(1-P_ii)], with pi
// the stationary distribution of the ORIGINAL chain (fixation weights are
// taken from the uncollapsed sequence).
double expected_transition_entropy_merged(const std::vector<std::vector<double>>& P);
double expected_stationary_entropy(const std::vector<std::vector<double>>& P);
std::vector<double> chain_stationary(const std::vector<std::vector<double>>& P);

// Constant-plus-noise trajectories with known level assignments; recoverable
// by construction when levels are >= 6 noise sd apart.
struct PlantedSeries {
    std::vector<tsc::MetricSeries> series;
    std::vector<int> truth;
};
PlantedSeries planted_cluster_series(std::span<const double> levels, int per_level,
                                     int len_min, int len_max, double noise_sd,
                                     std::uint64_t seed, const std::string& metric = "metric");

// Full synthetic cohort in the ingest schema, with planted participant groups
// (drift speed + performance shift) recorded as ground truth.
struct CohortSpec {
    int participants = 12;
    std::vector<int> semesters = {6, 7};
    int sessions_per_semester = 2;
    int opts_per_session = 10;
    int aois = 8;
    int steps_min = 30;
    int steps_max = 90;
    int groups = 2;
    double bfd_noise_sd = 0.04;
    std::uint64_t seed = 42;
};

struct Cohort {
    std::vector<FixationRecord> fixations;
    std::vector<TrialOutcome> outcomes;
    std::vector<std::pair<std::string, int>> truth; // participant -> group
};

Cohort generate_cohort(const CohortSpec& spec);

// Chains used by the cohort generator; exposed for tests.
std::vector<std::vector<double>> novice_chain(int aois);
std::vector<std::vector<double>> expert_chain(int aois, double focus = 0.9);

} // namespace gazenet::synth
