#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

// Deterministic helpers shared by the test suites. Raw engine draws are used
// instead of std::uniform_* distributions so values are identical across
// standard library implementations.

/// Self-cleaning scratch directory under the system temp root.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const int id = counter.fetch_add(1);
    path_ = std::filesystem::temp_directory_path() /
            ("adpipe_test_" + std::to_string(::getpid()) + "_" + std::to_string(id));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string sub(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double range_draw(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_draw(rng);
}

inline std::uint64_t below_draw(std::mt19937_64& rng, std::uint64_t n) {
  return rng() % n;
}
