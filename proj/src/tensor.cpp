#include "irattn/tensor.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace irattn {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    if (shape.empty()) {
        throw DimensionError("tensor rank must be at least 1");
    }
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0) {
            throw DimensionError("tensor extents must be positive");
        }
        if (e > std::numeric_limits<std::size_t>::max() / n) {
            throw DimensionError("tensor shape overflows size_t");
        }
        n *= e;
    }
    return n;
}

void check_finite(std::span<const float> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw ValueError("non-finite value at flat index " + std::to_string(i));
        }
    }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0f) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (shape_product(shape_) != data_.size()) {
        throw DimensionError("value count " + std::to_string(data_.size()) +
                             " does not match shape");
    }
    check_finite(data_);
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        t.at(i, i) = 1.0f;
    }
    return t;
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range");
    }
    return shape_[axis];
}

std::size_t Tensor::rows() const {
    if (rank() != 2) {
        throw DimensionError("rows() requires a rank-2 tensor");
    }
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) {
        throw DimensionError("cols() requires a rank-2 tensor");
    }
    return shape_[1];
}

std::size_t Tensor::index2(std::size_t r, std::size_t c) const {
    if (rank() != 2 || r >= shape_[0] || c >= shape_[1]) {
        throw DimensionError("2-d index out of range");
    }
    return r * shape_[1] + c;
}

std::size_t Tensor::index3(std::size_t i, std::size_t j, std::size_t k) const {
    if (rank() != 3 || i >= shape_[0] || j >= shape_[1] || k >= shape_[2]) {
        throw DimensionError("3-d index out of range");
    }
    return (i * shape_[1] + j) * shape_[2] + k;
}

float Tensor::at(std::size_t r, std::size_t c) const { return data_[index2(r, c)]; }
float& Tensor::at(std::size_t r, std::size_t c) { return data_[index2(r, c)]; }
float Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[index3(i, j, k)];
}
float& Tensor::at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[index3(i, j, k)];
}

BinaryMatrix::BinaryMatrix(std::size_t rows, std::size_t cols, bool value)
    : rows_(rows), cols_(cols), bits_(rows * cols, value ? 1 : 0) {
    if (rows == 0 || cols == 0) {
        throw DimensionError("binary matrix extents must be positive");
    }
}

BinaryMatrix BinaryMatrix::ones(std::size_t rows, std::size_t cols) {
    return BinaryMatrix(rows, cols, true);
}

bool BinaryMatrix::get(std::size_t r, std::size_t c) const {
    if (r >= rows_ || c >= cols_) {
        throw DimensionError("binary matrix index out of range");
    }
    return bits_[r * cols_ + c] != 0;
}

void BinaryMatrix::set(std::size_t r, std::size_t c, bool value) {
    if (r >= rows_ || c >= cols_) {
        throw DimensionError("binary matrix index out of range");
    }
    bits_[r * cols_ + c] = value ? 1 : 0;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("matmul requires rank-2 tensors");
    }
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul inner extents differ: " + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.rows()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out({m, n});
    const float* pa = a.values().data();
    const float* pb = b.values().data();
    float* po = out.values().data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            float acc = 0.0f;
            for (std::size_t t = 0; t < k; ++t) {
                acc += pa[i * k + t] * pb[t * n + j];
            }
            po[i * n + j] = acc;
        }
    }
    return out;
}

Tensor softmax_rows(const Tensor& logits) {
    if (logits.rank() != 2) {
        throw DimensionError("softmax_rows requires a rank-2 tensor");
    }
    const std::size_t m = logits.rows(), n = logits.cols();
    Tensor out({m, n});
    for (std::size_t r = 0; r < m; ++r) {
        float hi = logits.at(r, 0);
        for (std::size_t c = 1; c < n; ++c) {
            hi = std::max(hi, logits.at(r, c));
        }
        float sum = 0.0f;
        for (std::size_t c = 0; c < n; ++c) {
            const float e = std::exp(logits.at(r, c) - hi);
            out.at(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < n; ++c) {
            out.at(r, c) /= sum;
        }
    }
    return out;
}

Tensor masked_softmax_rows(const Tensor& logits, const BinaryMatrix& mask) {
    if (logits.rank() != 2) {
        throw DimensionError("masked_softmax_rows requires a rank-2 tensor");
    }
    if (logits.rows() != mask.rows() || logits.cols() != mask.cols()) {
        throw DimensionError("mask shape does not match logits");
    }
    const std::size_t m = logits.rows(), n = logits.cols();
    Tensor out({m, n});
    for (std::size_t r = 0; r < m; ++r) {
        bool any = false;
        float hi = 0.0f;
        for (std::size_t c = 0; c < n; ++c) {
            if (!mask.get(r, c)) {
                continue;
            }
            const float v = logits.at(r, c);
            hi = any ? std::max(hi, v) : v;
            any = true;
        }
        if (!any) {
            throw FullyMaskedRowError(r);
        }
        float sum = 0.0f;
        for (std::size_t c = 0; c < n; ++c) {
            if (!mask.get(r, c)) {
                continue;
            }
            const float e = std::exp(logits.at(r, c) - hi);
            out.at(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < n; ++c) {
            if (mask.get(r, c)) {
                out.at(r, c) /= sum;
            }
        }
    }
    return out;
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) {
        throw EmptyInputError("concat_cols needs at least one tensor");
    }
    const std::size_t m = parts[0].rows();
    std::size_t total = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != 2) {
            throw DimensionError("concat_cols requires rank-2 tensors");
        }
        if (p.rows() != m) {
            throw DimensionError("concat_cols row counts differ: " + std::to_string(m) +
                                 " vs " + std::to_string(p.rows()));
        }
        total += p.cols();
    }
    Tensor out({m, total});
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < p.cols(); ++c) {
                out.at(r, offset + c) = p.at(r, c);
            }
        }
        offset += p.cols();
    }
    return out;
}

Tensor transpose(const Tensor& t) {
    if (t.rank() != 2) {
        throw DimensionError("transpose requires a rank-2 tensor");
    }
    Tensor out({t.cols(), t.rows()});
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) {
            out.at(c, r) = t.at(r, c);
        }
    }
    return out;
}

Tensor slice_cols(const Tensor& t, std::size_t first, std::size_t count) {
    if (t.rank() != 2) {
        throw DimensionError("slice_cols requires a rank-2 tensor");
    }
    if (count == 0 || first + count > t.cols()) {
        throw DimensionError("column slice out of range");
    }
    Tensor out({t.rows(), count});
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < count; ++c) {
            out.at(r, c) = t.at(r, first + c);
        }
    }
    return out;
}

Tensor reshape(const Tensor& t, std::vector<std::size_t> shape) {
    Tensor out(std::move(shape));
    if (out.size() != t.size()) {
        throw DimensionError("reshape must preserve the value count");
    }
    std::copy(t.values().begin(), t.values().end(), out.values().begin());
    return out;
}

}  // namespace irattn
