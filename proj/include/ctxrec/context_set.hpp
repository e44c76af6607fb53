#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxrec {

// Reserved class label for "no context" in the pair classifier.
inline constexpr std::string_view kNoneLabel = "none";

// The finite, ordered set of similarity contexts.
class ContextSet {
 public:
  ContextSet() = default;
  // Throws InvalidArgumentError when empty, repeated, blank or "none".
  explicit ContextSet(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t i) const { return labels_[i]; }

  std::optional<std::size_t> index_of(std::string_view label) const;
  bool contains(std::string_view label) const { return index_of(label).has_value(); }
  // Throws UnknownContextError.
  std::size_t require(std::string_view label) const;

  bool operator==(const ContextSet&) const = default;

 private:
  std::vector<std::string> labels_;
};

}  // namespace ctxrec
