#include "ctxrec/context_set.hpp"

#include <algorithm>

#include "ctxrec/error.hpp"

namespace ctxrec {

ContextSet::ContextSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw InvalidArgumentError("context set is empty");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const auto& l = labels_[i];
    if (l.empty()) throw InvalidArgumentError("context label is empty");
    if (l == kNoneLabel) throw InvalidArgumentError("context label 'none' is reserved");
    if (std::find(labels_.begin(), labels_.begin() + static_cast<std::ptrdiff_t>(i), l) !=
        labels_.begin() + static_cast<std::ptrdiff_t>(i)) {
      throw InvalidArgumentError("context label '" + l + "' is repeated");
    }
  }
}

std::optional<std::size_t> ContextSet::index_of(std::string_view label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t ContextSet::require(std::string_view label) const {
  if (auto i = index_of(label)) return *i;
  throw UnknownContextError("unknown context '" + std::string(label) + "'");
}

}  // namespace ctxrec
