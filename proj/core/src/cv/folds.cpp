#include "pfoa/cv/folds.hpp"

#include <algorithm>

#include "pfoa/common/error.hpp"
#include "pfoa/common/rng.hpp"
#include "pfoa/io/manifest.hpp"

namespace pfoa::cv {

int FoldAssignment::fold_of(const std::string& subject_id) const {
    const auto it = fold_of_subject.find(subject_id);
    if (it == fold_of_subject.end())
        throw ValidationError("subject not in fold assignment: " + subject_id);
    return it->second;
}

std::string FoldAssignment::content_hash() const {
    std::string canonical;  // std::map iterates sorted by subject id
    for (const auto& [subject, fold] : fold_of_subject)
        canonical += subject + ":" + std::to_string(fold) + "\n";
    return io::sha256_hex(canonical);
}

FoldAssignment make_folds(const std::vector<synth::CohortRecord>& cohort, int k,
                          std::uint64_t seed) {
    if (k < 2) throw ValidationError("k must be >= 2, got " + std::to_string(k));

    struct SubjectStats {
        std::string id;
        int positives = 0;
        int knees = 0;
        std::uint64_t tie_break = 0;
    };
    std::map<std::string, SubjectStats> by_subject;
    for (const auto& rec : cohort) {
        auto& s = by_subject[rec.subject_id];
        s.id = rec.subject_id;
        s.positives += rec.label;
        s.knees += 1;
    }
    int positive_subjects = 0;
    for (const auto& [_, s] : by_subject) positive_subjects += (s.positives > 0);
    if (positive_subjects < k)
        throw ValidationError("stratified folds need >= k subjects with positive knees: have " +
                              std::to_string(positive_subjects) + ", k=" + std::to_string(k));

    std::vector<SubjectStats> subjects;
    subjects.reserve(by_subject.size());
    for (auto& [id, s] : by_subject) {
        s.tie_break = mix_seed(seed, std::hash<std::string>{}(id));
        subjects.push_back(s);
    }
    // Hardest-to-balance subjects first; the seeded key shuffles within ties.
    std::sort(subjects.begin(), subjects.end(), [](const SubjectStats& a, const SubjectStats& b) {
        if (a.positives != b.positives) return a.positives > b.positives;
        if (a.knees != b.knees) return a.knees > b.knees;
        return a.tie_break < b.tie_break;
    });

    std::vector<int> fold_pos(static_cast<std::size_t>(k), 0);
    std::vector<int> fold_total(static_cast<std::size_t>(k), 0);
    FoldAssignment out;
    out.k = k;
    for (const auto& s : subjects) {
        int best = 0;
        for (int f = 1; f < k; ++f) {
            const auto fi = static_cast<std::size_t>(f);
            const auto bi = static_cast<std::size_t>(best);
            if (fold_pos[fi] < fold_pos[bi] ||
                (fold_pos[fi] == fold_pos[bi] && fold_total[fi] < fold_total[bi]))
                best = f;
        }
        out.fold_of_subject[s.id] = best;
        fold_pos[static_cast<std::size_t>(best)] += s.positives;
        fold_total[static_cast<std::size_t>(best)] += s.knees;
    }
    return out;
}

}  // namespace pfoa::cv
