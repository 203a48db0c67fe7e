#pragma once

#include "gazenet/csv.hpp"
#include "gazenet/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace gazenet::ingest {

// fixations.csv: participant_id, semester, session_index, opt_index,
//                fixation_index, aoi_id, start_ms, duration_ms
// Rows come back sorted by (participant, semester, session, opt, fixation_index)
// and validated against the per-trial ordering invariants.
std::vector<FixationRecord> parse_fixation_log(const std::string& path,
                                               const csv::Dialect& d = {});
std::vector<FixationRecord> parse_fixations_text(const std::string& text,
                                                 const csv::Dialect& d = {});

// outcomes.csv: participant_id, semester, session_index, opt_index,
//               anomalies_found, anomalies_total, bfd_normalized
// (the last three columns are individually optional).
std::vector<TrialOutcome> parse_outcome_log(const std::string& path,
                                            const csv::Dialect& d = {});
std::vector<TrialOutcome> parse_outcomes_text(const std::string& text,
                                              const csv::Dialect& d = {});

std::string serialize_fixations(const std::vector<FixationRecord>& records,
                                const std::string& header_comment = {});
std::string serialize_outcomes(const std::vector<TrialOutcome>& outcomes,
                               const std::string& header_comment = {});

// Score in [0,1]: bfd_normalized when present, else found/total. Values within
// 1e-9 of a boundary are clamped; anything further out is an error.
double normalize_bfd(const TrialOutcome& outcome);

struct TrialTable {
    // Sorted by TrialKey; ordered_index assigned chronologically per participant.
    std::vector<std::pair<TrialKey, TrialData>> trials;
    // Outcome rows with no matching fixations (non-fatal).
    std::vector<std::string> warnings;
};

TrialTable build_trials(const std::vector<FixationRecord>& fixations,
                        const std::vector<TrialOutcome>& outcomes);

} // namespace gazenet::ingest
