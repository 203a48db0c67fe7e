#include "gazenet/synth.hpp"
#include "gazenet/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace gazenet::synth {

std::string aoi_label(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "a%02d", index);
    return buf;
}

int aoi_index(const std::string& label) {
    if (label.size() < 2 || label[0] != 'a')
        throw ValidationError("not a synthetic AOI label: " + label);
    return std::stoi(label.substr(1));
}

void validate_chain(const std::vector<std::vector<double>>& P) {
    const std::size_t n = P.size();
    if (n == 0) throw ValidationError("chain: empty transition matrix");
    for (const auto& row : P) {
        if (row.size() != n) throw ValidationError("chain: transition matrix not square");
        double sum = 0.0;
        for (double p : row) {
            if (p < 0.0) throw ValidationError("chain: negative transition probability");
            sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-12)
            throw ValidationError("chain: row does not sum to 1");
    }
}

std::vector<std::string> markov_scanpath(const ScanpathGenerator& gen) {
    validate_chain(gen.P);
    if (gen.aoi_count != static_cast<int>(gen.P.size()))
        throw ValidationError("chain: aoi_count does not match matrix size");
    if (gen.steps < 1) throw ValidationError("chain: steps must be >= 1");

    Rng rng(gen.seed);
    std::vector<double> init = gen.initial;
    if (init.empty()) init.assign(gen.aoi_count, 1.0 / gen.aoi_count);

    std::vector<std::string> seq;
    seq.reserve(gen.steps);
    int state = rng.discrete(init);
    seq.push_back(aoi_label(state));
    for (int t = 1; t < gen.steps; ++t) {
        state = rng.discrete(gen.P[state]);
        seq.push_back(aoi_label(state));
    }
    return seq;
}

std::vector<std::vector<std::string>> expertise_trajectory(
    const std::vector<std::vector<double>>& novice,
    const std::vector<std::vector<double>>& expert, int trials,
    std::span<const double> schedule, std::uint64_t seed, int steps) {
    validate_chain(novice);
    validate_chain(expert);
    if (novice.size() != expert.size())
        throw ValidationError("expertise_trajectory: chains must share the AOI set");
    if (static_cast<int>(schedule.size()) != trials)
        throw ValidationError("expertise_trajectory: schedule length must equal trials");

    const int n = static_cast<int>(novice.size());
    const Rng root(seed);
    std::vector<std::vector<std::string>> out;
    out.reserve(trials);
    for (int t = 0; t < trials; ++t) {
        const double s = schedule[t];
        ScanpathGenerator gen;
        gen.aoi_count = n;
        gen.steps = steps;
        gen.seed = root.derive(t).seed();
        gen.P.assign(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                gen.P[i][j] = (1.0 - s) * novice[i][j] + s * expert[i][j];
        out.push_back(markov_scanpath(gen));
    }
    return out;
}

std::vector<double> chain_stationary(const std::vector<std::vector<double>>& P) {
    validate_chain(P);
    const int n = static_cast<int>(P.size());
    std::vector<double> pi(n, 1.0 / n), next(n);
    for (int it = 0; it < 100000; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) next[j] += pi[i] * P[i][j];
        double l1 = 0.0;
        for (int i = 0; i < n; ++i) l1 += std::fabs(next[i] - pi[i]);
        pi.swap(next);
        if (l1 < 1e-14) return pi;
    }
    throw NumericalError("chain_stationary: power iteration did not converge");
}

double expected_stationary_entropy(const std::vector<std::vector<double>>& P) {
    double h = 0.0;
    for (double p : chain_stationary(P))
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

double expected_transition_entropy_merged(const std::vector<std::vector<double>>& P) {
    const auto pi = chain_stationary(P);
    const int n = static_cast<int>(P.size());
    double h = 0.0;
    for (int i = 0; i < n; ++i) {
        const double stay = P[i][i];
        const double leave = 1.0 - stay;
        if (leave <= 0.0) continue; // absorbing state: no observed transitions
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double p = P[i][j] / leave;
            if (p > 0.0) row -= p * std::log(p);
        }
        h += pi[i] * row;
    }
    return h;
}

PlantedSeries planted_cluster_series(std::span<const double> levels, int per_level,
                                     int len_min, int len_max, double noise_sd,
                                     std::uint64_t seed, const std::string& metric) {
    if (levels.empty()) throw ValidationError("planted series: no levels");
    if (per_level < 1) throw ValidationError("planted series: per_level must be >= 1");
    if (len_min < 2 || len_max < len_min)
        throw ValidationError("planted series: need lengths >= 2");

    Rng rng(seed);
    PlantedSeries out;
    int pid = 0;
    for (std::size_t lv = 0; lv < levels.size(); ++lv) {
        for (int p = 0; p < per_level; ++p, ++pid) {
            tsc::MetricSeries s;
            char buf[16];
            std::snprintf(buf, sizeof buf, "p%03d", pid);
            s.participant_id = buf;
            s.metric = metric;
            const int len = len_min + rng.uniform_int(len_max - len_min + 1);
            s.values.resize(len);
            for (int i = 0; i < len; ++i)
                s.values[i] = levels[lv] + (noise_sd > 0.0 ? rng.normal(0.0, noise_sd) : 0.0);
            out.series.push_back(std::move(s));
            out.truth.push_back(static_cast<int>(lv));
        }
    }
    return out;
}

std::vector<std::vector<double>> novice_chain(int aois) {
    // Uniform exploration over the other AOIs: maximal transition entropy.
    std::vector<std::vector<double>> P(aois, std::vector<double>(aois, 0.0));
    for (int i = 0; i < aois; ++i)
        for (int j = 0; j < aois; ++j)
            if (i != j) P[i][j] = 1.0 / (aois - 1);
    return P;
}

std::vector<std::vector<double>> expert_chain(int aois, double focus) {
    // Near-deterministic cyclic inspection route with a small back-glance and
    // an occasional return to the first AOI (a reference-point re-check). The
    // hub edge breaks the cyclic symmetry, keeping the adjacency spectrum
    // aperiodic so eigenvector centrality stays well-defined on sampled trials.
    std::vector<std::vector<double>> P(aois, std::vector<double>(aois, 0.0));
    const double rest = 1.0 - focus;
    for (int i = 0; i < aois; ++i) {
        const int fwd = (i + 1) % aois;
        const int back = (i + aois - 1) % aois;
        P[i][fwd] += focus;
        P[i][back] += rest * 0.4;
        P[i][0] += rest * 0.6;
    }
    return P;
}

Cohort generate_cohort(const CohortSpec& spec) {
    if (spec.participants < 1 || spec.aois < 3)
        throw ValidationError("cohort: need participants >= 1 and aois >= 3");
    if (spec.groups < 1) throw ValidationError("cohort: groups must be >= 1");

    const auto novice = novice_chain(spec.aois);
    const auto expert = expert_chain(spec.aois);
    const int trials_per_participant = static_cast<int>(spec.semesters.size()) *
                                       spec.sessions_per_semester * spec.opts_per_session;

    Cohort cohort;
    const Rng root(spec.seed);
    for (int p = 0; p < spec.participants; ++p) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "p%03d", p);
        const std::string pid = buf;
        const int group = p % spec.groups;
        cohort.truth.emplace_back(pid, group);
        // Group 0 drifts slowly toward the expert chain, later groups faster;
        // faster groups also carry a performance bonus (planted effects).
        const double rate = (group + 1.0) / spec.groups;
        Rng prng = root.derive(1000 + p);

        int t = 0;
        for (std::size_t si = 0; si < spec.semesters.size(); ++si) {
            for (int sess = 0; sess < spec.sessions_per_semester; ++sess) {
                for (int opt = 0; opt < spec.opts_per_session; ++opt, ++t) {
                    const double frac =
                        trials_per_participant > 1
                            ? static_cast<double>(t) / (trials_per_participant - 1)
                            : 0.0;
                    const double s = std::clamp(frac * rate, 0.0, 1.0);

                    // Each stimulus exposes its own AOI subset (always
                    // containing the reference AOI a00), so node counts,
                    // density and pagerank vary across trials.
                    const int m = std::min(spec.aois, 3 + prng.uniform_int(spec.aois - 2));
                    std::vector<int> pool;
                    for (int i = 1; i < spec.aois; ++i) pool.push_back(i);
                    prng.shuffle(pool);
                    std::vector<int> subset{0};
                    subset.insert(subset.end(), pool.begin(), pool.begin() + (m - 1));
                    std::sort(subset.begin(), subset.end());

                    ScanpathGenerator gen;
                    gen.aoi_count = m;
                    gen.steps = spec.steps_min +
                                prng.uniform_int(spec.steps_max - spec.steps_min + 1);
                    gen.seed = prng.derive(t).seed();
                    gen.P.assign(m, std::vector<double>(m, 0.0));
                    for (int a = 0; a < m; ++a) {
                        double row_sum = 0.0;
                        for (int b = 0; b < m; ++b) {
                            const double p = (1.0 - s) * novice[subset[a]][subset[b]] +
                                             s * expert[subset[a]][subset[b]];
                            gen.P[a][b] = p;
                            row_sum += p;
                        }
                        if (row_sum <= 0.0) {
                            for (int b = 0; b < m; ++b)
                                gen.P[a][b] = b == a ? 0.0 : 1.0 / (m - 1);
                        } else {
                            for (int b = 0; b < m; ++b) gen.P[a][b] /= row_sum;
                        }
                        // Exploration floor: keeps every restricted chain
                        // irreducible (no absorbing AOI, no one-way funnels).
                        constexpr double floor = 0.06;
                        for (int b = 0; b < m; ++b)
                            gen.P[a][b] = (1.0 - floor) * gen.P[a][b] +
                                          (b == a ? 0.0 : floor / (m - 1));
                        double check = 0.0;
                        for (int b = 0; b < m; ++b) check += gen.P[a][b];
                        for (int b = 0; b < m; ++b) gen.P[a][b] /= check;
                    }
                    auto seq = markov_scanpath(gen);
                    for (auto& a : seq) a = aoi_label(subset[aoi_index(a)]);

                    std::int64_t start = 0;
                    for (std::size_t f = 0; f < seq.size(); ++f) {
                        FixationRecord r;
                        r.participant_id = pid;
                        r.semester = spec.semesters[si];
                        r.session_index = sess;
                        r.opt_index = opt;
                        r.fixation_index = static_cast<int>(f);
                        r.aoi_id = seq[f];
                        r.start_ms = start;
                        r.duration_ms = 150 + prng.uniform_int(450);
                        start += r.duration_ms + prng.uniform_int(80);
                        cohort.fixations.push_back(std::move(r));
                    }

                    TrialOutcome o;
                    o.participant_id = pid;
                    o.semester = spec.semesters[si];
                    o.session_index = sess;
                    o.opt_index = opt;
                    const double bfd = 0.20 + 0.45 * s + 0.15 * group +
                                       prng.normal(0.0, spec.bfd_noise_sd);
                    o.bfd_normalized = std::clamp(bfd, 0.0, 1.0);
                    cohort.outcomes.push_back(std::move(o));
                }
            }
        }
    }
    return cohort;
}

} // namespace gazenet::synth
