#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "xdloc/dataset.h"
#include "xdloc/spm_matcher.h"

namespace xdloc {

// Best (smallest) 1-based rank of any relevant image. Throws
// Error(kInvalidArgument) for an empty relevance set and Error(kNotFound) when
// no relevant image appears in the ranking.
std::size_t best_relevant_rank(const RankedResult& ranking,
                               std::span<const ImageId> relevant);

// Average precision of one complete ranking.
double average_precision(const RankedResult& ranking, std::span<const ImageId> relevant);

// Averaged normalized rank in percent: mean over queries of
// 100 * best_relevant_rank / db_size. When `db_size` is absent each ranking's
// own length is used (per-query database subsets).
double anr(std::span<const RankedResult> rankings, const RelevanceSpec& relevance,
           std::optional<std::size_t> db_size = std::nullopt);

double mean_average_precision(std::span<const RankedResult> rankings,
                              const RelevanceSpec& relevance);

}  // namespace xdloc
