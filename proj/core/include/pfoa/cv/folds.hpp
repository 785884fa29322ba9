#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pfoa/synth/cohort.hpp"

namespace pfoa::cv {

/// Subject-level fold assignment: every knee of a subject shares a fold.
struct FoldAssignment {
    int k = 0;
    std::map<std::string, int> fold_of_subject;

    int fold_of(const std::string& subject_id) const;
    /// SHA-256 of the canonical "subject:fold" serialization; equal hashes
    /// guarantee identical assignments across model runs.
    std::string content_hash() const;
};

/// Greedy stratified assignment balancing subject-level positive-knee counts
/// across folds; deterministic for a fixed seed.
FoldAssignment make_folds(const std::vector<synth::CohortRecord>& cohort, int k,
                          std::uint64_t seed);

}  // namespace pfoa::cv
