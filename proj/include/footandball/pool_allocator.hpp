#pragma once

#include <cstddef>
#include <new>

namespace fnb {

namespace detail {
/// Caches large freed blocks by exact byte size so that the per-step
/// activations of a fixed network reuse memory instead of faulting in fresh
/// pages on every allocation.
void* pool_acquire(std::size_t bytes);
void pool_release(void* p, std::size_t bytes) noexcept;
}  // namespace detail

template <typename T>
struct PoolAllocator {
  using value_type = T;

  PoolAllocator() noexcept = default;
  template <typename U>
  PoolAllocator(const PoolAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(detail::pool_acquire(n * sizeof(T))); }
  void deallocate(T* p, std::size_t n) noexcept { detail::pool_release(p, n * sizeof(T)); }

  /// Value construction without arguments default-initializes, so
  /// arithmetic storage that is about to be overwritten is not zeroed first.
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    if constexpr (sizeof...(Args) == 0) {
      ::new (static_cast<void*>(p)) U;
    } else {
      ::new (static_cast<void*>(p)) U(static_cast<Args&&>(args)...);
    }
  }

  template <typename U>
  bool operator==(const PoolAllocator<U>&) const noexcept {
    return true;
  }
};

}  // namespace fnb
