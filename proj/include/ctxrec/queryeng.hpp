#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxrec/ctxsim.hpp"

namespace ctxrec {

// "Similar in these contexts, dissimilar in those."
struct AnalogicalQuery {
  std::string seed;
  std::vector<std::string> require;
  std::vector<std::string> exclude;
  std::size_t k = 10;
  double tau_sim = 0.5;
  double tau_dis = 0.2;

  // Throws InvalidArgumentError (conflicts, empty lists, k == 0) or
  // UnknownContextError.
  void validate(const ContextSet& contexts) const;

  bool operator==(const AnalogicalQuery&) const = default;
};

struct RecommendationItem {
  std::string id;
  double score = 0.0;
  std::vector<ContextScore> matched;
  std::vector<std::string> provenance;

  bool operator==(const RecommendationItem&) const = default;
};

// `seed=<id> (+<ctx>|-<ctx>)+ [k=<int>] [tau_sim=<f>] [tau_dis=<f>]`,
// whitespace separated.
AnalogicalQuery parse_query(std::string_view text, const ContextSet& contexts);

// Keeps every document d != seed with sim >= tau_sim for each required
// context and sim < tau_dis for each excluded one. Score is the mean
// required sim, or 1 - max excluded sim when nothing is required.
// Ranked by score, then id; at most k items. `documents` is the candidate
// universe and must contain the seed (NotFoundError otherwise).
std::vector<RecommendationItem> answer(const ContextGraph& g, std::span<const std::string> documents,
                                       const AnalogicalQuery& q);

// Round-robin over contexts: each round visits the contexts that still have
// an unseen neighbour, best remaining candidate first, and takes that
// candidate. A document is reported once, under the first context that
// reached it.
std::vector<RecommendationItem> recommend_diverse(const ContextGraph& g, std::span<const std::string> documents,
                                                  std::string_view seed, std::size_t k);

// Neighbours in one context, direct or through one intermediate document
// (score = product of the two hops, best path kept).
std::vector<RecommendationItem> recommend_focused(const ContextGraph& g, std::span<const std::string> documents,
                                                  std::string_view seed, std::string_view context, std::size_t k);

}  // namespace ctxrec
