#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tradediff {

/// Dense row-major 2-D array of doubles.
class Grid2 {
public:
    Grid2() = default;
    Grid2(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Grid2&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Dense row-major 3-D array of doubles; the last index varies fastest.
class Grid3 {
public:
    Grid3() = default;
    Grid3(std::size_t n0, std::size_t n1, std::size_t n2, double fill = 0.0)
        : n0_(n0), n1_(n1), n2_(n2), data_(n0 * n1 * n2, fill) {}

    double& operator()(std::size_t a, std::size_t b, std::size_t c) {
        return data_[(a * n1_ + b) * n2_ + c];
    }
    double operator()(std::size_t a, std::size_t b, std::size_t c) const {
        return data_[(a * n1_ + b) * n2_ + c];
    }

    std::span<double> row(std::size_t a, std::size_t b) {
        return {data_.data() + (a * n1_ + b) * n2_, n2_};
    }
    std::span<const double> row(std::size_t a, std::size_t b) const {
        return {data_.data() + (a * n1_ + b) * n2_, n2_};
    }

    std::size_t dim0() const { return n0_; }
    std::size_t dim1() const { return n1_; }
    std::size_t dim2() const { return n2_; }
    bool empty() const { return data_.empty(); }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Grid3&) const = default;

private:
    std::size_t n0_ = 0;
    std::size_t n1_ = 0;
    std::size_t n2_ = 0;
    std::vector<double> data_;
};

}  // namespace tradediff
