#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "focalkit/numerics/plane.hpp"
#include "focalkit/numerics/random.hpp"

namespace focalkit::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("focalkit_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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

inline Plane2D random_plane(Rng& rng, int h, int w, double lo, double hi) {
  Plane2D p(h, w);
  for (double& v : p.data()) v = rng.uniform(lo, hi);
  return p;
}

}  // namespace focalkit::testing
