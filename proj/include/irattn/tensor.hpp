#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "irattn/errors.hpp"

namespace irattn {

// Dense row-major float32 buffer with a fixed shape. Construction validates
// that extents are positive, that the value count matches the shape, and that
// every value is finite.
class Tensor {
public:
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<float> values);

    static Tensor identity(std::size_t n);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t extent(std::size_t axis) const;
    std::size_t size() const noexcept { return data_.size(); }

    std::size_t rows() const;
    std::size_t cols() const;

    float at(std::size_t r, std::size_t c) const;
    float& at(std::size_t r, std::size_t c);
    float at(std::size_t i, std::size_t j, std::size_t k) const;
    float& at(std::size_t i, std::size_t j, std::size_t k);

    std::span<const float> values() const noexcept { return data_; }
    std::span<float> values() noexcept { return data_; }

private:
    std::size_t index2(std::size_t r, std::size_t c) const;
    std::size_t index3(std::size_t i, std::size_t j, std::size_t k) const;

    std::vector<std::size_t> shape_;
    std::vector<float> data_;
};

// Allow/deny gate laid out like the matrix it masks.
class BinaryMatrix {
public:
    BinaryMatrix(std::size_t rows, std::size_t cols, bool value = false);
    static BinaryMatrix ones(std::size_t rows, std::size_t cols);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool get(std::size_t r, std::size_t c) const;
    void set(std::size_t r, std::size_t c, bool value);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> bits_;
};

// Product with a fixed summation order: for every output cell the terms are
// accumulated left to right over the inner dimension, so results are exactly
// reproducible.
Tensor matmul(const Tensor& a, const Tensor& b);

// Row-wise stable softmax (max subtraction before exp).
Tensor softmax_rows(const Tensor& logits);

// Row-wise softmax over the allowed entries only. Denied entries never enter
// the max, the exponentials, or the normalizer, and come out exactly 0.
// A row with no allowed entries raises FullyMaskedRowError naming the row.
Tensor masked_softmax_rows(const Tensor& logits, const BinaryMatrix& mask);

// Horizontal concatenation of rank-2 tensors sharing a row count.
Tensor concat_cols(std::span<const Tensor> parts);

Tensor transpose(const Tensor& t);
Tensor slice_cols(const Tensor& t, std::size_t first, std::size_t count);
Tensor reshape(const Tensor& t, std::vector<std::size_t> shape);

}  // namespace irattn
