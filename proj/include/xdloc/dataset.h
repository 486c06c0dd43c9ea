#pragma once

#include <map>
#include <vector>

#include "xdloc/core_model.h"

namespace xdloc {

// Relevant database images per query image id.
struct RelevanceSpec {
  std::map<ImageId, std::vector<ImageId>> relevant;

  bool operator==(const RelevanceSpec&) const = default;
};

// Database ids in the window [center - radius, center + radius] that exist in
// `database_ids`, ascending.
std::vector<ImageId> window_relevance(ImageId center, int radius,
                                      const std::vector<ImageId>& database_ids);

// Library, database and query collections plus ground truth.
struct Dataset {
  std::vector<ImageRecord> library;
  std::vector<ImageRecord> database;
  std::vector<ImageRecord> queries;
  RelevanceSpec relevance;
  // Optional per-query database restriction; queries without an entry are
  // ranked against the whole database.
  std::map<ImageId, std::vector<ImageId>> database_subsets;

  bool operator==(const Dataset&) const = default;
};

}  // namespace xdloc
