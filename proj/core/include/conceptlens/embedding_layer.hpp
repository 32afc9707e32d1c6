#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace conceptlens {

using InstanceId = std::uint32_t;

/// n x dim activations for one layer, stored as float32 row-major.
class EmbeddingLayer {
 public:
  EmbeddingLayer() = default;
  EmbeddingLayer(int layer_id, std::size_t dim, std::vector<float> values);

  [[nodiscard]] int layer_id() const noexcept { return layer_id_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t rows() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  [[nodiscard]] std::span<const float> row(std::size_t i) const noexcept {
    return {values_.data() + i * dim_, dim_};
  }
  [[nodiscard]] std::span<const float> values() const noexcept { return values_; }

 private:
  int layer_id_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

}  // namespace conceptlens
