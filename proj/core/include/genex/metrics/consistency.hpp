#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "genex/stance/stance.hpp"

namespace genex::metrics {

using stance::Leaning;

/// |C - s| / 2, one of {0, 0.5, 1}.
double consistency_loss(Leaning user_class, Leaning label);

/// A stance-labelled reply by a human or by the agent simulating them.
struct LabeledReply {
  std::string user_id;
  std::string parent_id;
  Leaning user_class = Leaning::Neutral;
  Leaning label = Leaning::Neutral;
};

/// Human and agent replies to the same parent by the same (simulated) user.
struct ReplyPair {
  std::string user_id;
  std::string parent_id;
  Leaning user_class = Leaning::Neutral;
  Leaning human = Leaning::Neutral;
  Leaning agent = Leaning::Neutral;
};

/// Joins the two populations on (user, parent). Throws AlignmentError when a
/// key is duplicated, present on one side only, or carries a different user
/// class on each side. Output is ordered by key.
std::vector<ReplyPair> align_replies(std::span<const LabeledReply> human,
                                     std::span<const LabeledReply> agent);

struct ClassConsistency {
  std::size_t users = 0;    // N_C
  std::size_t replies = 0;  // R
  double loss_human = 0.0;
  double loss_agent = 0.0;
  double consistency_human = 0.0;
  double consistency_agent = 0.0;
  bool defined = false;  // false when the class has no replies
};

struct ConsistencyReport {
  std::array<ClassConsistency, 3> by_class{};
  const ClassConsistency& at(Leaning c) const { return by_class[stance::index_of(c)]; }
};

/// Mean loss over all replies of each class, for humans and agents, and the
/// consistencies 1 - loss. Throws AlignmentError on a duplicated key.
ConsistencyReport aggregate_consistency(std::span<const ReplyPair> pairs);

}  // namespace genex::metrics
