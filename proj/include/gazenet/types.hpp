#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace gazenet {

// One timestamped AOI fixation event within a trial.
struct FixationRecord {
    std::string participant_id;
    int semester = 1;       // >= 1
    int session_index = 0;  // 0-based within semester
    int opt_index = 0;      // trial order within session
    int fixation_index = 0; // order within trial
    std::string aoi_id;
    std::int64_t start_ms = 0;
    std::int64_t duration_ms = 1; // > 0

    friend bool operator==(const FixationRecord&, const FixationRecord&) = default;
};

// Per-trial anomaly-detection outcome. At least one of (found & total) or
// bfd_normalized must be present; when both are given they must agree.
struct TrialOutcome {
    std::string participant_id;
    int semester = 1;
    int session_index = 0;
    int opt_index = 0;
    std::optional<std::int64_t> anomalies_found;
    std::optional<std::int64_t> anomalies_total;
    std::optional<double> bfd_normalized;

    friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

// Identifies one trial; ordered_index is the within-participant chronological
// trial counter, assigned 0..T-1 by (semester, session_index, opt_index).
struct TrialKey {
    std::string participant_id;
    int semester = 1;
    int session_index = 0;
    int opt_index = 0;
    int ordered_index = 0;

    auto sort_tuple() const {
        return std::tie(participant_id, semester, session_index, opt_index);
    }
    friend bool operator<(const TrialKey& a, const TrialKey& b) {
        return a.sort_tuple() < b.sort_tuple();
    }
    friend bool operator==(const TrialKey& a, const TrialKey& b) {
        return a.sort_tuple() == b.sort_tuple();
    }
};

// The fixation sequence of one trial plus its (optional) performance score.
struct TrialData {
    std::vector<std::string> aoi_seq;
    std::vector<std::int64_t> durations_ms;
    std::optional<double> bfd;
};

enum class CollapsePolicy { merge, keep_self_loops };
enum class PiSource { counts, durations };

} // namespace gazenet
