#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wnetgan::nn {

struct Shape4 {
    int n = 1, c = 1, h = 1, w = 1;
    std::int64_t numel() const {
        return static_cast<std::int64_t>(n) * c * h * w;
    }
    bool operator==(const Shape4&) const = default;
    std::string str() const;
};

// Dense NCHW float32 tensor.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape4 s, float fill = 0.0f)
        : shape_(s), data_(static_cast<std::size_t>(s.numel()), fill) {}

    static Tensor scalar(float v) { return Tensor(Shape4{1, 1, 1, 1}, v); }

    const Shape4& shape() const { return shape_; }
    std::int64_t numel() const { return shape_.numel(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& vec() { return data_; }
    const std::vector<float>& vec() const { return data_; }

    float& at(int n, int c, int y, int x) {
        return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
    }
    float at(int n, int c, int y, int x) const {
        return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
    }

    // offset of sample n's (C,H,W) block
    std::size_t sample_offset(int n) const {
        return static_cast<std::size_t>(n) * shape_.c * shape_.h * shape_.w;
    }

    void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

    float item() const { return data_.at(0); }

private:
    Shape4 shape_{0, 0, 0, 0};
    std::vector<float> data_;
};

// Row-major sgemm: C = alpha * op(A) * op(B) + beta * C.
// op(A) is M x K, op(B) is K x N, C is M x N.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
          const float* a, int lda, const float* b, int ldb, float beta,
          float* c, int ldc);

// Caps the BLAS worker pool; set_max_threads(1) gives the single-threaded
// deterministic mode used by the reproducibility tests.
void set_max_threads(int n);
int max_threads();

}  // namespace wnetgan::nn
