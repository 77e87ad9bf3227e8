#include "cuot/array.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace cuot {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Array::Array(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Array::Array(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != shape_size(shape_)) {
        throw InvalidField("array of " + std::to_string(data_.size()) + " values cannot have shape " +
                           shape_string(shape_));
    }
}

void Array::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

AxisLayout axis_layout(const Shape& shape, std::size_t axis) {
    AxisLayout l;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i < axis) l.outer *= shape[i];
        else if (i == axis) l.len = shape[i];
        else l.inner *= shape[i];
    }
    return l;
}

void require_shape(const Array& a, const Shape& expected, const char* what) {
    if (a.shape() != expected) {
        throw InvalidField(std::string(what) + ": expected shape " + shape_string(expected) + ", got " +
                           shape_string(a.shape()));
    }
}

}  // namespace cuot
