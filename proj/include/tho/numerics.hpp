#pragma once

// Dense float tensors and the transformer building blocks shared by every
// stage of the pipeline. Everything here is a pure function of its inputs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tho {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Row-major float32 tensor with a dynamic shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, float fill = 0.0f);
  Tensor(std::vector<std::size_t> shape, std::vector<float> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, float fill = 0.0f) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor vector(std::span<const float> values);
  static Tensor identity(std::size_t n);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  // Extents for 2-D views; a rank-1 tensor is a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::vector<float>& storage() { return data_; }
  const std::vector<float>& storage() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }
  float& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  float at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<float> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const float> row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }

  Tensor reshaped(std::vector<std::size_t> shape) const;
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<float> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

Tensor matmul(const Tensor& a, const Tensor& b);
// a · bᵀ without materialising the transpose.
Tensor matmul_transposed(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
// Adds a length-cols bias vector to every row.
Tensor add_row_bias(const Tensor& a, const Tensor& bias);
Tensor mean_rows(const Tensor& a);

Tensor softmax_rows(const Tensor& x);
Tensor gelu(const Tensor& x);
float gelu(float x);

struct LayerNorm {
  Tensor gain;
  Tensor bias;
  float eps = 1e-5f;

  static LayerNorm identity(std::size_t dim);
};

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps = 1e-5f);
inline Tensor layer_norm(const Tensor& x, const LayerNorm& ln) {
  return layer_norm(x, ln.gain, ln.bias, ln.eps);
}

/// y = x·W + b with W stored in×out.
struct Linear {
  Tensor weight;
  Tensor bias;

  static Linear zeros(std::size_t in, std::size_t out);
  std::size_t in_dim() const { return weight.dim(0); }
  std::size_t out_dim() const { return weight.dim(1); }
  Tensor operator()(const Tensor& x) const;
};

/// Stack of linear layers with GELU between consecutive layers (none after the last).
struct Mlp {
  std::vector<Linear> layers;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }
  Tensor operator()(const Tensor& x) const;
};

struct AttentionConfig {
  std::size_t model_dim = 512;
  std::size_t num_heads = 8;
  std::size_t ffn_dim = 2048;

  std::size_t head_dim() const { return model_dim / num_heads; }
  void validate() const;
};

struct AttentionWeights {
  Linear query;
  Linear key;
  Linear value;
  Linear output;
};

struct FfnWeights {
  Linear expand;
  Linear contract;
};

/// Head-averaged, row-stochastic attention weights (queries × keys).
using AttentionMap = Tensor;

struct AttentionResult {
  Tensor output;
  AttentionMap weights;
};

inline constexpr float kMaskedLogit = -std::numeric_limits<float>::infinity();

// Scaled dot-product attention over already projected Q/K/V split into heads
// along the feature axis. Returns the concatenated head outputs (before the
// output projection) and the head-averaged attention matrix.
AttentionResult scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                     std::size_t num_heads, const Tensor* bias_mask = nullptr);

AttentionResult multi_head_attention(const Tensor& q_in, const Tensor& k_in, const Tensor& v_in,
                                     const AttentionWeights& w, const AttentionConfig& cfg,
                                     const Tensor* bias_mask = nullptr);

Tensor ffn(const Tensor& x, const FfnWeights& w, const AttentionConfig& cfg);

/// Dense h×w×C grid with cell centres at integer coordinates.
struct FeatureMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::size_t stride = 1;  // crop pixels per cell
  Tensor data;             // h×w×C

  FeatureMap() = default;
  FeatureMap(std::size_t h, std::size_t w, std::size_t c, std::size_t stride_px = 1);
  static FeatureMap from_tensor(Tensor t, std::size_t stride_px);

  std::span<const float> cell(std::size_t y, std::size_t x) const {
    return {data.storage().data() + (y * width + x) * channels, channels};
  }
  std::span<float> cell(std::size_t y, std::size_t x) {
    return {data.storage().data() + (y * width + x) * channels, channels};
  }
};

// Samples at (u, v) = (column, row) in cell units. Coordinates outside the
// grid are clamped to the border.
Tensor bilinear_sample(const FeatureMap& map, double u, double v);
void bilinear_sample_into(const FeatureMap& map, double u, double v, std::span<float> out);

// THOF binary tensor files.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);
void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

// Little-endian primitives shared with the checkpoint format.
namespace binio {
void write_u32(std::ostream& os, std::uint32_t v);
std::uint32_t read_u32(std::istream& is);
void write_f32(std::ostream& os, std::span<const float> values);
void read_f32(std::istream& is, std::span<float> values);
void write_shape(std::ostream& os, const std::vector<std::size_t>& shape);
std::vector<std::size_t> read_shape(std::istream& is);
}  // namespace binio

}  // namespace tho
