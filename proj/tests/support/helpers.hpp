#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "ldec/error.hpp"

namespace testing {

// True when fn throws an ldec::Error whose message contains `fragment`.
inline bool throws_with(const std::function<void()>& fn, const std::string& fragment) {
  try {
    fn();
  } catch (const ldec::Error& e) {
    return std::string(e.what()).find(fragment) != std::string::npos;
  }
  return false;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("ldec_" + tag + "_" + std::to_string(rd()));
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
