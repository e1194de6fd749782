#pragma once
#include <cassert>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace amir::nn {

// 64-byte aligned allocator for tensor storage. Keeping every buffer on the
// same alignment makes Eigen's vectorized kernels take identical code paths
// run to run, so training is bitwise reproducible; with malloc'd buffers the
// heap offset varies per process and float summation order drifts.
template <class T>
struct AlignedAlloc {
  using value_type = T;
  static constexpr std::size_t alignment = 64;
  AlignedAlloc() = default;
  template <class U>
  AlignedAlloc(const AlignedAlloc<U>&) {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(
        ::operator new(n * sizeof(T), std::align_val_t(alignment)));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t(alignment));
  }
  template <class U>
  bool operator==(const AlignedAlloc<U>&) const { return true; }
  template <class U>
  bool operator!=(const AlignedAlloc<U>&) const { return false; }
};

template <class T>
using AlignedVec = std::vector<T, AlignedAlloc<T>>;

// Dense n-dimensional array, row-major.
template <class T>
struct NdArray {
  std::vector<int> shape;
  AlignedVec<T> v;

  NdArray() = default;
  explicit NdArray(std::vector<int> s, T fill = T(0)) : shape(std::move(s)) {
    v.assign(numel_of(shape), fill);
  }

  static size_t numel_of(const std::vector<int>& s) {
    size_t n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("negative dimension");
      n *= static_cast<size_t>(d);
    }
    return n;
  }
  size_t numel() const { return v.size(); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }
};

inline bool same_shape(const std::vector<int>& a, const std::vector<int>& b) {
  return a == b;
}

}  // namespace amir::nn
