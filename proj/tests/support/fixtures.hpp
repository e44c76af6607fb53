#pragma once
#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "ctxrec/corpus.hpp"

namespace ctxrec::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(CTXREC_TEST_DATA_DIR) / name;
}

// One-section document with one paragraph of the given sentences.
inline Document simple_doc(std::string id, std::vector<std::string> sentences, std::string title = "") {
  Document d;
  d.id = std::move(id);
  d.title = std::move(title);
  d.sections.push_back({"", {std::move(sentences)}});
  return d;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "ctxrec") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace ctxrec::testing
