#include "tho/numerics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

namespace tho {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_2d(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(what) + ": expected a matrix, got " + shape_string(t.shape()));
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, float fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (product(shape_) != data_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::vector(std::span<const float> values) {
  return Tensor({values.size()}, std::vector<float>(values.begin(), values.end()));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t = matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0f;
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? 1 : data_.size() / shape_.back();
}

std::size_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const { return Tensor(std::move(shape), data_); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float x) { return std::isfinite(x); });
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner extents differ " + shape_string(a.shape()) + " · " +
                     shape_string(b.shape()));
  }
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    float* o = out.storage().data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float aip = a[i * k + p];
      if (aip == 0.0f) continue;
      const float* brow = b.storage().data() + p * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += aip * brow[j];
    }
  }
  return out;
}

Tensor matmul_transposed(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) {
    throw ShapeError("matmul_transposed: inner extents differ " + shape_string(a.shape()) +
                     " · " + shape_string(b.shape()) + "ᵀ");
  }
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a.storage().data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const float* brow = b.storage().data() + j * k;
      float acc = 0.0f;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      out.at(i, j) = acc;
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_2d(a, "transpose");
  Tensor out = Tensor::matrix(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor scale(const Tensor& a, float s) {
  Tensor out = a;
  for (float& x : out.storage()) x *= s;
  return out;
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias) {
  if (bias.size() != a.cols()) {
    throw ShapeError("bias length " + std::to_string(bias.size()) + " vs " +
                     std::to_string(a.cols()) + " columns");
  }
  Tensor out = a;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
  return out;
}

Tensor mean_rows(const Tensor& a) {
  const std::size_t n = a.rows(), d = a.cols();
  if (n == 0) throw ShapeError("mean_rows: empty tensor");
  std::vector<double> acc(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = a.row(r);
    for (std::size_t c = 0; c < d; ++c) acc[c] += row[c];
  }
  Tensor out({d});
  for (std::size_t c = 0; c < d; ++c) out[c] = static_cast<float>(acc[c] / static_cast<double>(n));
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  Tensor out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const float mx = *std::max_element(row.begin(), row.end());
    if (mx == kMaskedLogit) throw std::domain_error("softmax_rows: every logit in a row is masked");
    double sum = 0.0;
    for (float& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (float& v : row) v *= inv;
  }
  return out;
}

float gelu(float x) {
  return static_cast<float>(0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))));
}

Tensor gelu(const Tensor& x) {
  Tensor out = x;
  for (float& v : out.storage()) v = gelu(v);
  return out;
}

LayerNorm LayerNorm::identity(std::size_t dim) {
  return {Tensor({dim}, 1.0f), Tensor({dim}, 0.0f), 1e-5f};
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps) {
  const std::size_t d = x.cols();
  if (d == 0) throw ShapeError("layer_norm: empty feature axis");
  if (gain.size() != d || bias.size() != d) {
    throw ShapeError("layer_norm: affine parameters of length " + std::to_string(gain.size()) +
                     "/" + std::to_string(bias.size()) + " for feature dim " + std::to_string(d));
  }
  Tensor out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double mean = 0.0;
    for (float v : row) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (float v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      row[c] = static_cast<float>((row[c] - mean) * inv * gain[c] + bias[c]);
    }
  }
  return out;
}

Linear Linear::zeros(std::size_t in, std::size_t out) {
  return {Tensor::matrix(in, out), Tensor({out})};
}

Tensor Linear::operator()(const Tensor& x) const {
  if (x.cols() != in_dim()) {
    throw ShapeError("linear: input width " + std::to_string(x.cols()) + ", layer expects " +
                     std::to_string(in_dim()));
  }
  Tensor as_matrix = x.rank() == 2 ? x : x.reshaped({x.rows(), x.cols()});
  return add_row_bias(matmul(as_matrix, weight), bias);
}

Tensor Mlp::operator()(const Tensor& x) const {
  if (layers.empty()) throw ShapeError("mlp: no layers");
  Tensor h = layers.front()(x);
  for (std::size_t i = 1; i < layers.size(); ++i) h = layers[i](gelu(h));
  return h;
}

void AttentionConfig::validate() const {
  if (model_dim == 0 || num_heads == 0 || ffn_dim == 0) {
    throw std::invalid_argument("attention config: dimensions must be positive");
  }
  if (model_dim % num_heads != 0) {
    throw std::invalid_argument("attention config: model_dim " + std::to_string(model_dim) +
                                " not divisible by " + std::to_string(num_heads) + " heads");
  }
}

AttentionResult scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                     std::size_t num_heads, const Tensor* bias_mask) {
  const std::size_t nq = q.rows(), nk = k.rows(), d = q.cols();
  if (k.cols() != d || v.cols() != d || v.rows() != nk) {
    throw ShapeError("attention: q " + shape_string(q.shape()) + ", k " + shape_string(k.shape()) +
                     ", v " + shape_string(v.shape()));
  }
  if (num_heads == 0 || d % num_heads != 0) {
    throw ShapeError("attention: width " + std::to_string(d) + " not divisible into " +
                     std::to_string(num_heads) + " heads");
  }
  if (bias_mask && (bias_mask->rows() != nq || bias_mask->cols() != nk)) {
    throw ShapeError("attention: mask " + shape_string(bias_mask->shape()) + " for " +
                     std::to_string(nq) + " queries and " + std::to_string(nk) + " keys");
  }
  const std::size_t hd = d / num_heads;
  const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(hd));

  AttentionResult res{Tensor::matrix(nq, d), Tensor::matrix(nq, nk)};
  Tensor logits = Tensor::matrix(nq, nk);
  for (std::size_t h = 0; h < num_heads; ++h) {
    const std::size_t off = h * hd;
    for (std::size_t i = 0; i < nq; ++i) {
      const float* qi = q.storage().data() + i * d + off;
      for (std::size_t j = 0; j < nk; ++j) {
        const float* kj = k.storage().data() + j * d + off;
        float acc = 0.0f;
        for (std::size_t c = 0; c < hd; ++c) acc += qi[c] * kj[c];
        float logit = acc * inv_sqrt;
        if (bias_mask) logit += bias_mask->at(i, j);
        logits.at(i, j) = logit;
      }
    }
    const Tensor probs = softmax_rows(logits);
    for (std::size_t i = 0; i < nq; ++i) {
      float* oi = res.output.storage().data() + i * d + off;
      for (std::size_t j = 0; j < nk; ++j) {
        const float p = probs.at(i, j);
        res.weights.at(i, j) += p;
        if (p == 0.0f) continue;
        const float* vj = v.storage().data() + j * d + off;
        for (std::size_t c = 0; c < hd; ++c) oi[c] += p * vj[c];
      }
    }
  }
  const float inv_heads = 1.0f / static_cast<float>(num_heads);
  for (float& w : res.weights.storage()) w *= inv_heads;
  return res;
}

AttentionResult multi_head_attention(const Tensor& q_in, const Tensor& k_in, const Tensor& v_in,
                                     const AttentionWeights& w, const AttentionConfig& cfg,
                                     const Tensor* bias_mask) {
  cfg.validate();
  for (const Tensor* t : {&q_in, &k_in, &v_in}) {
    if (t->cols() != cfg.model_dim) {
      throw ShapeError("attention input width " + std::to_string(t->cols()) + " != model_dim " +
                       std::to_string(cfg.model_dim));
    }
  }
  AttentionResult res =
      scaled_dot_attention(w.query(q_in), w.key(k_in), w.value(v_in), cfg.num_heads, bias_mask);
  res.output = w.output(res.output);
  return res;
}

Tensor ffn(const Tensor& x, const FfnWeights& w, const AttentionConfig& cfg) {
  if (x.cols() != cfg.model_dim || w.expand.out_dim() != cfg.ffn_dim ||
      w.contract.out_dim() != cfg.model_dim) {
    throw ShapeError("ffn: input " + shape_string(x.shape()) + " with expand " +
                     shape_string(w.expand.weight.shape()) + ", contract " +
                     shape_string(w.contract.weight.shape()));
  }
  return w.contract(gelu(w.expand(x)));
}

FeatureMap::FeatureMap(std::size_t h, std::size_t w, std::size_t c, std::size_t stride_px)
    : height(h), width(w), channels(c), stride(stride_px), data({h, w, c}) {}

FeatureMap FeatureMap::from_tensor(Tensor t, std::size_t stride_px) {
  if (t.rank() != 3) throw ShapeError("feature map must be h×w×C, got " + shape_string(t.shape()));
  FeatureMap m;
  m.height = t.dim(0);
  m.width = t.dim(1);
  m.channels = t.dim(2);
  m.stride = stride_px;
  m.data = std::move(t);
  return m;
}

void bilinear_sample_into(const FeatureMap& map, double u, double v, std::span<float> out) {
  if (map.height == 0 || map.width == 0) throw ShapeError("bilinear_sample: empty map");
  if (out.size() != map.channels) throw ShapeError("bilinear_sample: output width mismatch");
  u = std::clamp(u, 0.0, static_cast<double>(map.width - 1));
  v = std::clamp(v, 0.0, static_cast<double>(map.height - 1));
  const auto x0 = static_cast<std::size_t>(std::floor(u));
  const auto y0 = static_cast<std::size_t>(std::floor(v));
  const std::size_t x1 = std::min(x0 + 1, map.width - 1);
  const std::size_t y1 = std::min(y0 + 1, map.height - 1);
  const double fx = u - static_cast<double>(x0);
  const double fy = v - static_cast<double>(y0);
  const double w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy), w10 = (1 - fx) * fy, w11 = fx * fy;
  auto c00 = map.cell(y0, x0), c01 = map.cell(y0, x1), c10 = map.cell(y1, x0), c11 = map.cell(y1, x1);
  for (std::size_t c = 0; c < map.channels; ++c) {
    out[c] = static_cast<float>(w00 * c00[c] + w01 * c01[c] + w10 * c10[c] + w11 * c11[c]);
  }
}

Tensor bilinear_sample(const FeatureMap& map, double u, double v) {
  Tensor out({map.channels});
  bilinear_sample_into(map, u, v, out.data());
  return out;
}

namespace binio {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) throw std::runtime_error("unexpected end of file");
  return v;
}

void write_f32(std::ostream& os, std::span<const float> values) {
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size() * sizeof(float)));
}

void read_f32(std::istream& is, std::span<float> values) {
  if (!is.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(values.size() * sizeof(float)))) {
    throw std::runtime_error("unexpected end of file in tensor payload");
  }
}

void write_shape(std::ostream& os, const std::vector<std::size_t>& shape) {
  write_u32(os, static_cast<std::uint32_t>(shape.size()));
  for (std::size_t e : shape) write_u32(os, static_cast<std::uint32_t>(e));
}

std::vector<std::size_t> read_shape(std::istream& is) {
  const std::uint32_t rank = read_u32(is);
  if (rank > 16) throw std::runtime_error("implausible tensor rank " + std::to_string(rank));
  std::vector<std::size_t> shape(rank);
  std::size_t total = 1;
  for (auto& e : shape) {
    e = read_u32(is);
    total *= e;
    if (total > (std::size_t{1} << 32)) throw std::runtime_error("implausible tensor size");
  }
  return shape;
}

}  // namespace binio

void write_tensor(std::ostream& os, const Tensor& t) {
  os.write("THOF", 4);
  binio::write_shape(os, t.shape());
  binio::write_f32(os, t.data());
}

Tensor read_tensor(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "THOF") {
    throw std::runtime_error("not a THOF tensor file (bad magic)");
  }
  auto shape = binio::read_shape(is);
  Tensor t(std::move(shape));
  binio::read_f32(is, t.data());
  return t;
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_tensor(os, t);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_tensor(is);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace tho
