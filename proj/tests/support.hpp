#pragma once

// Seeded generators and float64 reference implementations shared by the test suites.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "tho/geometry.hpp"
#include "tho/numerics.hpp"

namespace tho::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double sigma = 1.0) { return std::normal_distribution<double>(0.0, sigma)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  std::mt19937_64& engine() { return engine_; }

  Vec3 vec3(double scale = 1.0) { return Vec3(uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale)); }

  Points points(std::size_t n, double scale = 1.0) {
    Points p(n);
    for (Vec3& v : p) v = vec3(scale);
    return p;
  }

  // Uniform on SO(3) via a normalised quaternion.
  Mat3 rotation() {
    Eigen::Quaterniond q(normal(), normal(), normal(), normal());
    q.normalize();
    return q.toRotationMatrix();
  }

  Mat3 rotation_up_to(double max_angle) {
    const Vec3 axis = Vec3(normal(), normal(), normal()).normalized();
    return Eigen::AngleAxisd(uniform(0.0, max_angle), axis).toRotationMatrix();
  }

  Tensor tensor(std::vector<std::size_t> shape, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (float& x : t.storage()) x = static_cast<float>(normal(scale));
    return t;
  }

  Linear linear(std::size_t in, std::size_t out, double scale = -1.0) {
    if (scale < 0.0) scale = 1.0 / std::sqrt(static_cast<double>(in));
    return {tensor({in, out}, scale), tensor({out}, 0.1)};
  }

  AttentionWeights attention(std::size_t d) { return {linear(d, d), linear(d, d), linear(d, d), linear(d, d)}; }
  FfnWeights ffn(std::size_t d, std::size_t hidden) { return {linear(d, hidden), linear(hidden, d)}; }
  LayerNorm norm(std::size_t d) {
    LayerNorm ln = LayerNorm::identity(d);
    for (float& g : ln.gain.storage()) g = static_cast<float>(1.0 + normal(0.1));
    for (float& b : ln.bias.storage()) b = static_cast<float>(normal(0.1));
    return ln;
  }

 private:
  std::mt19937_64 engine_;
};

// Row-major float64 matrix used by the reference implementations.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}
  explicit Mat(const Tensor& t) : rows(t.rows()), cols(t.cols()), v(t.storage().begin(), t.storage().end()) {}
  double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

inline Mat ref_matmul(const Mat& a, const Mat& b) {
  Mat c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline Mat ref_linear(const Mat& x, const Linear& l) {
  Mat y = ref_matmul(x, Mat(l.weight));
  for (std::size_t i = 0; i < y.rows; ++i)
    for (std::size_t j = 0; j < y.cols; ++j) y(i, j) += l.bias[j];
  return y;
}

inline double ref_gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline Mat ref_mlp(Mat x, const Mlp& m) {
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    x = ref_linear(x, m.layers[i]);
    if (i + 1 < m.layers.size())
      for (double& e : x.v) e = ref_gelu(e);
  }
  return x;
}

inline Mat ref_layer_norm(const Mat& x, const LayerNorm& ln) {
  Mat y(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) mean += x(i, j);
    mean /= x.cols;
    for (std::size_t j = 0; j < x.cols; ++j) var += (x(i, j) - mean) * (x(i, j) - mean);
    var /= x.cols;
    for (std::size_t j = 0; j < x.cols; ++j)
      y(i, j) = (x(i, j) - mean) / std::sqrt(var + ln.eps) * ln.gain[j] + ln.bias[j];
  }
  return y;
}

inline Mat ref_add(Mat a, const Mat& b) {
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
  return a;
}

struct RefAttention {
  Mat output;
  Mat weights;
};

// Softmax attention over pre-projected q/k/v split into heads; mask entries may be -inf.
inline RefAttention ref_heads(const Mat& q, const Mat& k, const Mat& v, std::size_t heads, const Mat* mask = nullptr) {
  const std::size_t hd = q.cols / heads;
  RefAttention r{Mat(q.rows, q.cols), Mat(q.rows, k.rows)};
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < q.rows; ++i) {
      std::vector<double> logit(k.rows);
      double mx = -INFINITY;
      for (std::size_t j = 0; j < k.rows; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < hd; ++c) s += q(i, h * hd + c) * k(j, h * hd + c);
        logit[j] = s / std::sqrt(double(hd)) + (mask ? (*mask)(i, j) : 0.0);
        mx = std::max(mx, logit[j]);
      }
      double z = 0.0;
      for (double& l : logit) z += (l = std::exp(l - mx));
      for (std::size_t j = 0; j < k.rows; ++j) {
        const double p = logit[j] / z;
        r.weights(i, j) += p / heads;
        for (std::size_t c = 0; c < hd; ++c) r.output(i, h * hd + c) += p * v(j, h * hd + c);
      }
    }
  return r;
}

inline RefAttention ref_mha(const Mat& q_in, const Mat& k_in, const Mat& v_in, const AttentionWeights& w,
                            std::size_t heads, const Mat* mask = nullptr) {
  RefAttention r = ref_heads(ref_linear(q_in, w.query), ref_linear(k_in, w.key), ref_linear(v_in, w.value), heads, mask);
  r.output = ref_linear(r.output, w.output);
  return r;
}

inline Mat ref_ffn(const Mat& x, const FfnWeights& f) {
  Mat h = ref_linear(x, f.expand);
  for (double& e : h.v) e = ref_gelu(e);
  return ref_linear(h, f.contract);
}

inline double max_abs_diff(const Tensor& t, const Mat& m) {
  double d = 0.0;
  for (std::size_t i = 0; i < m.v.size(); ++i) d = std::max(d, std::abs(double(t[i]) - m.v[i]));
  return d;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(double(a[i]) - double(b[i])));
  return d;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tho_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

}  // namespace tho::testing
