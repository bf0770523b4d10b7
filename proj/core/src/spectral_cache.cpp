#include "esqpt/spectral_cache.hpp"

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace esqpt {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'E', 'S', 'Q', 'P', 'T', 'S', 'P', 'C'};

static_assert(std::endian::native == std::endian::little,
              "spectral cache files are little-endian; add byte swapping for this host");

std::string hex_double(double x) {
  std::ostringstream os;
  os << std::hexfloat << x;
  return os.str();
}

#pragma pack(push, 1)
struct Header {
  char magic[8];
  std::uint32_t version;
  std::uint8_t geometry;
  std::uint8_t sector;
  std::uint16_t reserved;
  std::int32_t twice_s;
  double lambda;
  double v;
  std::uint64_t rows;
  std::uint64_t levels;
  std::uint64_t product_dim;
  std::uint64_t checksum;
};
#pragma pack(pop)

std::uint64_t payload_checksum(const SpectralData& sd) {
  std::uint64_t h = fnv1a(sd.energies.data(), sizeof(double) * static_cast<std::size_t>(sd.energies.size()));
  return fnv1a(sd.vectors.data(), sizeof(double) * static_cast<std::size_t>(sd.vectors.size()), h);
}

ModelParams params_of(const SpectralKey& key) {
  ModelParams p;
  p.spin = SpinSize::from_twice(key.twice_s);
  p.lambda = key.lambda;
  p.v = key.v;
  p.geometry = key.geometry;
  return p;
}

std::atomic<std::uint64_t> g_tmp_counter{0};

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

SpectralKey SpectralKey::from(const ModelParams& p, Sector sector) {
  SpectralKey k;
  k.geometry = p.geometry;
  k.twice_s = p.spin.twice();
  k.lambda = p.lambda;
  // v does not enter the single-spin Hamiltonian.
  k.v = p.geometry == Geometry::system_only ? 0.0 : p.v;
  k.sector = sector;
  return k;
}

std::string SpectralKey::canonical() const {
  std::ostringstream os;
  os << "geometry=" << (geometry == Geometry::two_spin ? "two_spin" : "system_only")
     << ";twice_s=" << twice_s << ";lambda=" << hex_double(lambda) << ";v=" << hex_double(v)
     << ";sector=" << to_string(sector);
  return os.str();
}

std::string SpectralKey::file_name() const {
  const std::string c = canonical();
  std::ostringstream os;
  os << "spectrum-" << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a(c.data(), c.size()) << ".bin";
  return os.str();
}

void write_spectral_file(const fs::path& path, const SpectralKey& key, const SpectralData& sd) {
  if (!sd.has_vectors()) throw std::invalid_argument("write_spectral_file: no eigenvectors to store");
  Header hdr{};
  std::memcpy(hdr.magic, kMagic, sizeof kMagic);
  hdr.version = kSpectralFormatVersion;
  hdr.geometry = static_cast<std::uint8_t>(key.geometry);
  hdr.sector = static_cast<std::uint8_t>(key.sector);
  hdr.twice_s = key.twice_s;
  hdr.lambda = key.lambda;
  hdr.v = key.v;
  hdr.rows = static_cast<std::uint64_t>(sd.vectors.rows());
  hdr.levels = static_cast<std::uint64_t>(sd.energies.size());
  hdr.product_dim = static_cast<std::uint64_t>(sd.product_dim());
  hdr.checksum = payload_checksum(sd);

  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(g_tmp_counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write spectral cache file " + tmp.string());
    out.write(reinterpret_cast<const char*>(&hdr), sizeof hdr);
    out.write(reinterpret_cast<const char*>(sd.energies.data()),
              static_cast<std::streamsize>(sizeof(double) * hdr.levels));
    out.write(reinterpret_cast<const char*>(sd.vectors.data()),
              static_cast<std::streamsize>(sizeof(double) * sd.vectors.size()));
    if (!out) throw std::runtime_error("short write to spectral cache file " + tmp.string());
  }
  fs::rename(tmp, path);
}

LoadResult read_spectral_file(const fs::path& path, const SpectralKey& key) {
  LoadResult result;
  std::ifstream in(path, std::ios::binary);
  if (!in) return result;

  Header hdr{};
  in.read(reinterpret_cast<char*>(&hdr), sizeof hdr);
  if (!in || std::memcmp(hdr.magic, kMagic, sizeof kMagic) != 0 ||
      hdr.version != kSpectralFormatVersion) {
    result.status = LoadStatus::corrupt;
    return result;
  }
  SpectralKey stored;
  stored.geometry = static_cast<Geometry>(hdr.geometry);
  stored.sector = static_cast<Sector>(hdr.sector);
  stored.twice_s = hdr.twice_s;
  stored.lambda = hdr.lambda;
  stored.v = hdr.v;
  if (!(stored == key)) {
    result.status = LoadStatus::key_mismatch;
    return result;
  }

  const ModelParams p = params_of(key);
  SpectralData sd;
  sd.params = p;
  sd.sector = key.sector;
  sd.basis = key.sector == Sector::full ? SectorBasis(Sector::full, p.dim(), {})
                                        : model_parity(p).basis(key.sector);
  if (hdr.product_dim != static_cast<std::uint64_t>(p.dim()) ||
      hdr.rows != static_cast<std::uint64_t>(sd.basis.dim()) || hdr.levels != hdr.rows) {
    result.status = LoadStatus::corrupt;
    return result;
  }
  sd.energies.resize(static_cast<Index>(hdr.levels));
  sd.vectors.resize(static_cast<Index>(hdr.rows), static_cast<Index>(hdr.levels));
  in.read(reinterpret_cast<char*>(sd.energies.data()),
          static_cast<std::streamsize>(sizeof(double) * hdr.levels));
  in.read(reinterpret_cast<char*>(sd.vectors.data()),
          static_cast<std::streamsize>(sizeof(double) * sd.vectors.size()));
  if (!in || payload_checksum(sd) != hdr.checksum) {
    result.status = LoadStatus::corrupt;
    return result;
  }
  result.status = LoadStatus::ok;
  result.data = std::move(sd);
  return result;
}

// ---------------------------------------------------------------------------

SpectralCache::SpectralCache(fs::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) fs::create_directories(dir_);
}

fs::path SpectralCache::path_for(const SpectralKey& key) const { return dir_ / key.file_name(); }

SpectralCache::Stats SpectralCache::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

SpectralCache::Handle SpectralCache::get_or_compute(const SpectralKey& key,
                                                    const std::function<Handle()>& compute) {
  const std::string id = key.canonical();
  std::promise<Handle> promise;
  {
    std::unique_lock lock(mutex_);
    if (auto it = memo_.find(id); it != memo_.end()) {
      if (Handle h = it->second.lock()) return h;
    }
    if (auto it = inflight_.find(id); it != inflight_.end()) {
      auto fut = it->second;
      lock.unlock();
      return fut.get();
    }
    inflight_.emplace(id, promise.get_future().share());
  }
  try {
    Handle h = compute();
    promise.set_value(h);
    std::lock_guard lock(mutex_);
    memo_[id] = h;
    inflight_.erase(id);
    return h;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mutex_);
    inflight_.erase(id);
    throw;
  }
}

SpectralCache::Handle SpectralCache::load_or_solve(const ModelParams& p, Sector sector) {
  const SpectralKey key = SpectralKey::from(p, sector);
  if (!dir_.empty()) {
    LoadResult r = read_spectral_file(path_for(key), key);
    {
      std::lock_guard lock(mutex_);
      if (r.status == LoadStatus::ok) ++stats_.loaded;
      if (r.status == LoadStatus::corrupt) ++stats_.corrupt;
      if (r.status == LoadStatus::key_mismatch) ++stats_.key_mismatch;
    }
    if (r.status == LoadStatus::ok) return std::make_shared<const SpectralData>(std::move(*r.data));
  }
  ModelParams canonical = p;
  if (p.geometry == Geometry::system_only) canonical.v = 0.0;
  auto sd = std::make_shared<SpectralData>(solve_model(canonical, sector));
  {
    std::lock_guard lock(mutex_);
    ++stats_.computed;
  }
  if (!dir_.empty()) write_spectral_file(path_for(key), key, *sd);
  return sd;
}

std::shared_ptr<const SpectralData> SpectralCache::get(const ModelParams& p, Sector sector) {
  p.validate();
  const SpectralKey key = SpectralKey::from(p, sector);
  if (sector == Sector::full) {
    return get_or_compute(key, [&] {
      Handle even = get(p, Sector::even);
      Handle odd = get(p, Sector::odd);
      return std::make_shared<const SpectralData>(merge_sectors(*even, *odd));
    });
  }
  return get_or_compute(key, [&] { return load_or_solve(p, sector); });
}

}  // namespace esqpt
