#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace cqpm {

using cd = std::complex<double>;
using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major real tensor (rank <= 4 in practice).
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), data(numel(shape), fill) {}
  Tensor(Shape s, std::vector<double> d);

  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
};

// Dense row-major complex tensor.
struct CTensor {
  Shape shape;
  std::vector<cd> data;

  CTensor() = default;
  explicit CTensor(Shape s, cd fill = {}) : shape(std::move(s)), data(numel(shape), fill) {}
  CTensor(Shape s, std::vector<cd> d);

  std::size_t size() const { return data.size(); }
  cd& operator[](std::size_t i) { return data[i]; }
  const cd& operator[](std::size_t i) const { return data[i]; }
};

}  // namespace cqpm
