#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <string>
#include <vector>
#include <unistd.h>

#include "jobskill/corpus.hpp"

namespace fixture {

// Minimal valid advertisement.
inline jobskill::corpus::JobAd ad(std::string id, std::string title, std::vector<std::string> skills) {
  jobskill::corpus::JobAd a;
  a.id = std::move(id);
  a.job_name = std::move(title);
  a.key_skills = std::move(skills);
  return a;
}

inline jobskill::corpus::Corpus corpus_of(std::vector<jobskill::corpus::JobAd> ads) {
  return jobskill::corpus::Corpus{std::move(ads), "test"};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("jobskill-test-" + std::to_string(::getpid()) + "-" + std::to_string(stamp) + "-" +
             std::to_string(counter++));
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

inline std::filesystem::path data_dir() { return JOBSKILL_DATA_DIR; }

}  // namespace fixture
