#pragma once

// Load-or-compute store for model spectra.
//
// One file per (geometry, S, lambda, v, sector) key, named by a hash of the
// key. Layout (all little-endian):
//
//   char[8]  magic "ESQPTSPC"
//   u32      format version
//   u8       geometry, u8 sector, u16 reserved
//   i32      2S
//   f64      lambda, v
//   u64      sector dimension (rows of the eigenvector block)
//   u64      number of levels
//   u64      product dimension
//   u64      FNV-1a checksum of the payload
//   payload: energies (f64 x levels), eigenvectors (f64, column-major)
//
// Writes go to a temporary file that is renamed into place, so concurrent
// writers of one key race harmlessly.

#include "esqpt/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace esqpt {

struct SpectralKey {
  Geometry geometry = Geometry::two_spin;
  int twice_s = 0;
  double lambda = 0.0;
  double v = 0.0;
  Sector sector = Sector::full;

  static SpectralKey from(const ModelParams& p, Sector sector);
  /// Canonical text form; doubles are written in hexadecimal so keys are exact.
  std::string canonical() const;
  std::string file_name() const;
  friend bool operator==(const SpectralKey&, const SpectralKey&) = default;
};

inline constexpr std::uint32_t kSpectralFormatVersion = 1;

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

/// Writes via temp file + atomic rename. The data must hold eigenvectors.
void write_spectral_file(const std::filesystem::path& path, const SpectralKey& key,
                         const SpectralData& sd);

enum class LoadStatus { ok, missing, key_mismatch, corrupt };

struct LoadResult {
  LoadStatus status = LoadStatus::missing;
  std::optional<SpectralData> data;
};

LoadResult read_spectral_file(const std::filesystem::path& path, const SpectralKey& key);

class SpectralCache {
public:
  struct Stats {
    std::uint64_t computed = 0;
    std::uint64_t loaded = 0;
    std::uint64_t corrupt = 0;
    std::uint64_t key_mismatch = 0;
  };

  /// An empty directory disables persistence; results are still shared
  /// in-process while someone holds them.
  explicit SpectralCache(std::filesystem::path dir = {});

  /// Full-sector requests are assembled from the cached even and odd sectors.
  std::shared_ptr<const SpectralData> get(const ModelParams& p, Sector sector);

  std::filesystem::path path_for(const SpectralKey& key) const;
  const std::filesystem::path& directory() const { return dir_; }
  Stats stats() const;

private:
  using Handle = std::shared_ptr<const SpectralData>;
  Handle get_or_compute(const SpectralKey& key, const std::function<Handle()>& compute);
  Handle load_or_solve(const ModelParams& p, Sector sector);

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::weak_ptr<const SpectralData>> memo_;
  std::map<std::string, std::shared_future<Handle>> inflight_;
  Stats stats_;
};

}  // namespace esqpt
