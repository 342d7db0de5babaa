#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "irattn/tensor.hpp"
#include "test_support.hpp"

using irattn::BinaryMatrix;
using irattn::Tensor;
using testsup::Rng;

namespace {

// Naive reference product, double accumulator.
Tensor matmul_ref(const Tensor& a, const Tensor& b) {
    Tensor out({a.rows(), b.cols()});
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                acc += static_cast<double>(a.at(i, k)) * static_cast<double>(b.at(k, j));
            }
            out.at(i, j) = static_cast<float>(acc);
        }
    }
    return out;
}

// Per-row exclude-then-softmax in double.
std::vector<double> masked_softmax_row_ref(const std::vector<double>& logits,
                                           const std::vector<bool>& allowed) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < logits.size(); ++c) {
        if (allowed[c]) {
            hi = std::max(hi, logits[c]);
        }
    }
    std::vector<double> out(logits.size(), 0.0);
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c) {
        if (allowed[c]) {
            out[c] = std::exp(logits[c] - hi);
            sum += out[c];
        }
    }
    for (double& v : out) {
        v /= sum;
    }
    return out;
}

}  // namespace

TEST_CASE("construction validates shape and values") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0f, 2.0f}), irattn::DimensionError);
    CHECK_THROWS_AS(Tensor({0, 3}), irattn::DimensionError);
    CHECK_THROWS_AS(Tensor({}, {}), irattn::DimensionError);
    CHECK_THROWS_AS(Tensor({1}, {std::nanf("")}), irattn::ValueError);
    CHECK_THROWS_AS(Tensor({2}, {1.0f, std::numeric_limits<float>::infinity()}),
                    irattn::ValueError);
    const Tensor ok({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
    CHECK(ok.at(1, 0) == 3.0f);
}

TEST_CASE("identity matmul returns the operand") {
    const Tensor a({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
    const Tensor out = matmul(Tensor::identity(2), a);
    CHECK(testsup::bitwise_equal(out.values(), a.values()));
}

TEST_CASE("matmul selects columns") {
    const Tensor a({2, 2}, {1.0f, 0.0f, 0.0f, 1.0f});
    const Tensor b({2, 1}, {0.0f, 5.0f});
    const Tensor out = matmul(a, b);
    CHECK(out.at(0, 0) == 0.0f);
    CHECK(out.at(1, 0) == 5.0f);
}

TEST_CASE("matmul matches the scalar reference") {
    Rng rng(101);
    const Tensor a = testsup::random_tensor(rng, {7, 5});
    const Tensor b = testsup::random_tensor(rng, {5, 3});
    const Tensor got = matmul(a, b);
    const Tensor want = matmul_ref(a, b);
    CHECK(testsup::max_abs_diff(got.values(), want.values()) <= 1e-6f);
}

TEST_CASE("matmul rejects mismatched inner extents") {
    Rng rng(7);
    const Tensor a = testsup::random_tensor(rng, {2, 3});
    const Tensor b = testsup::random_tensor(rng, {4, 2});
    CHECK_THROWS_AS(matmul(a, b), irattn::DimensionError);
}

TEST_CASE("repeated matmul is bitwise identical") {
    Rng rng(313);
    const Tensor a = testsup::random_tensor(rng, {6, 9});
    const Tensor b = testsup::random_tensor(rng, {9, 4});
    const Tensor first = matmul(a, b);
    for (int round = 0; round < 5; ++round) {
        CHECK(testsup::bitwise_equal(matmul(a, b).values(), first.values()));
    }
}

TEST_CASE("uniform logits soften to uniform weights") {
    const Tensor logits({1, 2}, {0.0f, 0.0f});
    const Tensor out = masked_softmax_rows(logits, BinaryMatrix::ones(1, 2));
    CHECK(out.at(0, 0) == 0.5f);
    CHECK(out.at(0, 1) == 0.5f);
}

TEST_CASE("a single allowed entry takes all the weight") {
    const Tensor logits({1, 3}, {5.0f, -2.0f, 9.0f});
    BinaryMatrix mask(1, 3);
    mask.set(0, 1, true);
    const Tensor out = masked_softmax_rows(logits, mask);
    CHECK(out.at(0, 0) == 0.0f);
    CHECK(out.at(0, 1) == 1.0f);
    CHECK(out.at(0, 2) == 0.0f);
}

TEST_CASE("masked softmax matches the per-row reference") {
    Rng rng(55);
    const Tensor logits = testsup::random_tensor(rng, {6, 6});
    BinaryMatrix mask(6, 6);
    for (std::size_t r = 0; r < 6; ++r) {
        mask.set(r, rng.index(6), true);  // keep every row satisfiable
        for (std::size_t c = 0; c < 6; ++c) {
            if (rng.chance(0.5)) {
                mask.set(r, c, true);
            }
        }
    }
    const Tensor out = masked_softmax_rows(logits, mask);
    for (std::size_t r = 0; r < 6; ++r) {
        std::vector<double> row(6);
        std::vector<bool> allowed(6);
        for (std::size_t c = 0; c < 6; ++c) {
            row[c] = logits.at(r, c);
            allowed[c] = mask.get(r, c);
        }
        const std::vector<double> want = masked_softmax_row_ref(row, allowed);
        for (std::size_t c = 0; c < 6; ++c) {
            CHECK(std::abs(out.at(r, c) - want[c]) <= 1e-6);
            if (!allowed[c]) {
                CHECK(out.at(r, c) == 0.0f);
            }
        }
    }
}

TEST_CASE("a fully masked row is an error naming the row") {
    Rng rng(9);
    const Tensor logits = testsup::random_tensor(rng, {3, 4});
    BinaryMatrix mask = BinaryMatrix::ones(3, 4);
    for (std::size_t c = 0; c < 4; ++c) {
        mask.set(1, c, false);
    }
    CHECK_THROWS_WITH_AS(masked_softmax_rows(logits, mask), "row 1 has no allowed entries",
                         irattn::FullyMaskedRowError);
}

TEST_CASE("all-ones mask reproduces the plain softmax") {
    Rng rng(23);
    for (int round = 0; round < 10; ++round) {
        const Tensor logits = testsup::random_tensor(rng, {5, 7});
        const Tensor masked = masked_softmax_rows(logits, BinaryMatrix::ones(5, 7));
        const Tensor plain = softmax_rows(logits);
        CHECK(testsup::max_abs_diff(masked.values(), plain.values()) <= 1e-7f);
    }
}

TEST_CASE("adding a constant per row leaves the weights unchanged") {
    Rng rng(29);
    const Tensor logits = testsup::random_tensor(rng, {4, 6});
    BinaryMatrix mask(4, 6);
    for (std::size_t r = 0; r < 4; ++r) {
        mask.set(r, rng.index(6), true);
        for (std::size_t c = 0; c < 6; ++c) {
            if (rng.chance(0.6)) {
                mask.set(r, c, true);
            }
        }
    }
    Tensor shifted = logits;
    for (std::size_t r = 0; r < 4; ++r) {
        const float offset = rng.uniform(-3.0f, 3.0f);
        for (std::size_t c = 0; c < 6; ++c) {
            shifted.at(r, c) += offset;
        }
    }
    const Tensor a = masked_softmax_rows(logits, mask);
    const Tensor b = masked_softmax_rows(shifted, mask);
    CHECK(testsup::max_abs_diff(a.values(), b.values()) <= 1e-6f);
}

TEST_CASE("weights in every row sum to one") {
    Rng rng(31);
    const Tensor logits = testsup::random_tensor(rng, {8, 8});
    BinaryMatrix mask(8, 8);
    for (std::size_t r = 0; r < 8; ++r) {
        mask.set(r, rng.index(8), true);
        for (std::size_t c = 0; c < 8; ++c) {
            if (rng.chance(0.4)) {
                mask.set(r, c, true);
            }
        }
    }
    const Tensor out = masked_softmax_rows(logits, mask);
    for (std::size_t r = 0; r < 8; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 8; ++c) {
            sum += out.at(r, c);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
}

TEST_CASE("concat of one block copies it") {
    Rng rng(41);
    const Tensor a = testsup::random_tensor(rng, {3, 4});
    const std::vector<Tensor> parts{a};
    const Tensor out = concat_cols(parts);
    CHECK(testsup::bitwise_equal(out.values(), a.values()));
}

TEST_CASE("concat joins blocks left to right") {
    const Tensor a({2, 1}, {1.0f, 3.0f});
    const Tensor b({2, 1}, {2.0f, 4.0f});
    const std::vector<Tensor> parts{a, b};
    const Tensor out = concat_cols(parts);
    CHECK(out.at(0, 0) == 1.0f);
    CHECK(out.at(0, 1) == 2.0f);
    CHECK(out.at(1, 0) == 3.0f);
    CHECK(out.at(1, 1) == 4.0f);
}

TEST_CASE("concat round-trips through column slices") {
    Rng rng(43);
    const Tensor a = testsup::random_tensor(rng, {4, 2});
    const Tensor b = testsup::random_tensor(rng, {4, 5});
    const Tensor c = testsup::random_tensor(rng, {4, 1});
    const std::vector<Tensor> parts{a, b, c};
    const Tensor joined = concat_cols(parts);
    CHECK(joined.cols() == 8);
    CHECK(testsup::bitwise_equal(slice_cols(joined, 0, 2).values(), a.values()));
    CHECK(testsup::bitwise_equal(slice_cols(joined, 2, 5).values(), b.values()));
    CHECK(testsup::bitwise_equal(slice_cols(joined, 7, 1).values(), c.values()));
}

TEST_CASE("concat rejects an empty list and mismatched rows") {
    CHECK_THROWS_AS(irattn::concat_cols({}), irattn::EmptyInputError);
    Rng rng(47);
    const Tensor a = testsup::random_tensor(rng, {3, 2});
    const Tensor b = testsup::random_tensor(rng, {4, 2});
    const std::vector<Tensor> parts{a, b};
    CHECK_THROWS_AS(concat_cols(parts), irattn::DimensionError);
}

TEST_CASE("transpose flips indices") {
    Rng rng(53);
    const Tensor a = testsup::random_tensor(rng, {3, 5});
    const Tensor t = transpose(a);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            CHECK(t.at(c, r) == a.at(r, c));
        }
    }
}
