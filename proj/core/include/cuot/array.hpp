#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cuot/errors.hpp"

namespace cuot {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major n-d array of doubles. The leading axis is time for every
/// field in this library.
class Array {
public:
    Array() = default;
    explicit Array(Shape shape, double fill = 0.0);
    Array(Shape shape, std::vector<double> values);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    void fill(double value);

    friend bool operator==(const Array&, const Array&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Decomposition of a row-major array around one axis: element (o, j, i) of
/// an (outer, len, inner) view lives at o*len*inner + j*inner + i.
struct AxisLayout {
    std::size_t outer = 1;
    std::size_t len = 1;
    std::size_t inner = 1;

    std::size_t index(std::size_t o, std::size_t j, std::size_t i) const {
        return (o * len + j) * inner + i;
    }
};

AxisLayout axis_layout(const Shape& shape, std::size_t axis);

void require_shape(const Array& a, const Shape& expected, const char* what);

}  // namespace cuot
