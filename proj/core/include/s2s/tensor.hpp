#pragma once

#include "s2s/error.hpp"

#include <vector>

namespace s2s {

/// Channel-major 1D feature map: values[c * length + i].
template <typename T>
struct Tensor1D {
    int channels = 0;
    int length = 0;
    std::vector<T> values;

    Tensor1D() = default;
    Tensor1D(int channels_, int length_)
        : channels(channels_), length(length_),
          values(static_cast<std::size_t>(channels_) * static_cast<std::size_t>(length_), T(0)) {}

    T* row(int c) { return values.data() + static_cast<std::size_t>(c) * length; }
    const T* row(int c) const { return values.data() + static_cast<std::size_t>(c) * length; }

    T& at(int c, int i) { return values[static_cast<std::size_t>(c) * length + i]; }
    const T& at(int c, int i) const { return values[static_cast<std::size_t>(c) * length + i]; }
};

template <typename T>
using TensorBatch = std::vector<Tensor1D<T>>;

template <typename T>
using VectorBatch = std::vector<std::vector<T>>;

} // namespace s2s
