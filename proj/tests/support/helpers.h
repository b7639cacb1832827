#ifndef WIC_TESTS_HELPERS_H_
#define WIC_TESTS_HELPERS_H_

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wic/corpus.h"
#include "wic/numkit.h"

namespace wic::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, SeededRng& rng,
                            double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-scale, scale);
  return m;
}

inline Vector random_vector(std::size_t n, SeededRng& rng, double scale = 1.0) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

inline std::vector<WordId> random_ids(std::size_t n, std::size_t vocab, SeededRng& rng) {
  std::vector<WordId> ids(n);
  for (auto& id : ids) id = static_cast<WordId>(rng.index(vocab));
  return ids;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("wic_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace wic::testing

#endif  // WIC_TESTS_HELPERS_H_
