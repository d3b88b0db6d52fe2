#include "footandball/pool_allocator.hpp"

#include <cstdlib>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace fnb::detail {
namespace {

constexpr std::size_t kMinPooledBytes = 1 << 16;
constexpr std::size_t kMaxCachedBytes = std::size_t{1} << 31;

struct Pool {
  std::mutex mutex;
  std::unordered_map<std::size_t, std::vector<void*>> free_blocks;
  std::size_t cached_bytes = 0;

  ~Pool() {
    for (auto& [bytes, blocks] : free_blocks) {
      for (void* p : blocks) std::free(p);
    }
  }
};

Pool& pool() {
  static Pool* instance = new Pool();  // outlives static tensors destroyed at exit
  return *instance;
}

}  // namespace

void* pool_acquire(std::size_t bytes) {
  if (bytes >= kMinPooledBytes) {
    Pool& p = pool();
    std::lock_guard<std::mutex> lock(p.mutex);
    auto it = p.free_blocks.find(bytes);
    if (it != p.free_blocks.end() && !it->second.empty()) {
      void* block = it->second.back();
      it->second.pop_back();
      p.cached_bytes -= bytes;
      return block;
    }
  }
  void* block = std::aligned_alloc(64, (bytes + 63) / 64 * 64 + (bytes == 0 ? 64 : 0));
  if (!block) throw std::bad_alloc();
  return block;
}

void pool_release(void* block, std::size_t bytes) noexcept {
  if (!block) return;
  if (bytes >= kMinPooledBytes) {
    Pool& p = pool();
    std::lock_guard<std::mutex> lock(p.mutex);
    if (p.cached_bytes + bytes <= kMaxCachedBytes) {
      try {
        p.free_blocks[bytes].push_back(block);
        p.cached_bytes += bytes;
        return;
      } catch (...) {
      }
    }
  }
  std::free(block);
}

}  // namespace fnb::detail
