#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "ecgfwd/bidomain.hpp"
#include "ecgfwd/config.hpp"

namespace testing {

// Coarse default-like problem shared by several test files, computed once.
inline const ecgfwd::RunConfig& coarse_config() {
  static const ecgfwd::RunConfig c = [] {
    ecgfwd::RunConfig r;
    r.mesh = {16.0, 32.0, 16, 64};
    r.T = 50.0;
    return r;
  }();
  return c;
}

inline const ecgfwd::BidomainRun& coarse_run() {
  static const ecgfwd::BidomainRun run = [] {
    auto mesh = ecgfwd::make_mesh(coarse_config());
    return ecgfwd::run_bidomain(ecgfwd::make_bidomain_config(coarse_config(), mesh));
  }();
  return run;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ecgfwd_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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

}  // namespace testing
