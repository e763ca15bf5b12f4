#include "genex/metrics/consistency.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>
#include <utility>

#include "genex/common/error.hpp"
#include "genex/common/numeric.hpp"

namespace genex::metrics {

namespace {

using Key = std::pair<std::string, std::string>;

std::string describe(const Key& k) { return "(user " + k.first + ", parent " + k.second + ")"; }

std::map<Key, const LabeledReply*> index_replies(std::span<const LabeledReply> replies,
                                                 const char* side) {
  std::map<Key, const LabeledReply*> out;
  for (const auto& r : replies) {
    Key k{r.user_id, r.parent_id};
    if (!out.emplace(k, &r).second) {
      throw AlignmentError(std::string("duplicate ") + side + " reply for " + describe(k));
    }
  }
  return out;
}

}  // namespace

double consistency_loss(Leaning user_class, Leaning label) {
  return std::abs(stance::score(user_class) - stance::score(label)) / 2.0;
}

std::vector<ReplyPair> align_replies(std::span<const LabeledReply> human,
                                     std::span<const LabeledReply> agent) {
  const auto h = index_replies(human, "human");
  const auto a = index_replies(agent, "agent");
  std::vector<ReplyPair> out;
  out.reserve(h.size());
  auto ai = a.begin();
  for (const auto& [key, hr] : h) {
    if (ai == a.end() || ai->first != key) {
      if (ai != a.end() && ai->first < key) {
        throw AlignmentError("agent reply without human counterpart " + describe(ai->first));
      }
      throw AlignmentError("human reply without agent counterpart " + describe(key));
    }
    const LabeledReply* ar = ai->second;
    if (ar->user_class != hr->user_class) {
      throw AlignmentError("user class differs between populations for " + describe(key));
    }
    out.push_back(ReplyPair{key.first, key.second, hr->user_class, hr->label, ar->label});
    ++ai;
  }
  if (ai != a.end()) {
    throw AlignmentError("agent reply without human counterpart " + describe(ai->first));
  }
  return out;
}

ConsistencyReport aggregate_consistency(std::span<const ReplyPair> pairs) {
  std::set<Key> seen;
  std::array<std::set<std::string>, 3> users;
  std::array<CompensatedSum, 3> human_loss;
  std::array<CompensatedSum, 3> agent_loss;
  ConsistencyReport report;
  for (const auto& p : pairs) {
    if (!seen.emplace(p.user_id, p.parent_id).second) {
      throw AlignmentError("duplicate reply pair for " + describe({p.user_id, p.parent_id}));
    }
    const std::size_t c = stance::index_of(p.user_class);
    users[c].insert(p.user_id);
    human_loss[c].add(consistency_loss(p.user_class, p.human));
    agent_loss[c].add(consistency_loss(p.user_class, p.agent));
    ++report.by_class[c].replies;
  }
  for (std::size_t c = 0; c < 3; ++c) {
    auto& e = report.by_class[c];
    e.users = users[c].size();
    if (e.replies == 0) continue;
    const double r = static_cast<double>(e.replies);
    e.loss_human = human_loss[c].value() / r;
    e.loss_agent = agent_loss[c].value() / r;
    e.consistency_human = 1.0 - e.loss_human;
    e.consistency_agent = 1.0 - e.loss_agent;
    e.defined = true;
  }
  return report;
}

}  // namespace genex::metrics
