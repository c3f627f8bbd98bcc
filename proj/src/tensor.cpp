#include "cqpm/tensor.hpp"

#include <stdexcept>

namespace cqpm {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (data.size() != numel(shape))
    throw std::invalid_argument("tensor data size does not match shape " + shape_str(shape));
}

CTensor::CTensor(Shape s, std::vector<cd> d) : shape(std::move(s)), data(std::move(d)) {
  if (data.size() != numel(shape))
    throw std::invalid_argument("complex tensor data size does not match shape " + shape_str(shape));
}

}  // namespace cqpm
