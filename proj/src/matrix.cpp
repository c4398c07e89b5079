// Copyright 2026 The Posig Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "posig/matrix.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "posig/simd/kernels.hpp"

namespace posig {

namespace {

template <typename T>
void TransposeInto(const T* src, int rows, int cols, std::vector<T>& dst) {
  dst.resize(static_cast<size_t>(rows) * cols);
  constexpr int kBlock = 16;
  for (int r0 = 0; r0 < rows; r0 += kBlock) {
    for (int c0 = 0; c0 < cols; c0 += kBlock) {
      const int r1 = std::min(rows, r0 + kBlock);
      const int c1 = std::min(cols, c0 + kBlock);
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c)
          dst[static_cast<size_t>(c) * rows + r] = src[static_cast<size_t>(r) * cols + c];
    }
  }
}

void ShapeError(const char* op) {
  throw std::invalid_argument(std::string("matrix shape mismatch in ") + op);
}

template <typename T>
void PrepareOutput(Matrix<T>& c, int rows, int cols, bool accumulate,
                   const char* op) {
  if (accumulate) {
    if (c.rows() != rows || c.cols() != cols) ShapeError(op);
  } else if (c.rows() != rows || c.cols() != cols) {
    c.Resize(rows, cols);
  }
}

}  // namespace

template <typename T>
void MatMul(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c,
            bool accumulate) {
  if (a.cols() != b.rows()) ShapeError("MatMul");
  PrepareOutput(c, a.rows(), b.cols(), accumulate, "MatMul");
  simd::Kernels<T>().gemm_nn(a.rows(), b.cols(), a.cols(), a.data(), a.cols(),
                             b.data(), b.cols(), c.data(), c.cols(), accumulate);
}

template <typename T>
void MatMulNT(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c,
              bool accumulate) {
  if (a.cols() != b.cols()) ShapeError("MatMulNT");
  PrepareOutput(c, a.rows(), b.rows(), accumulate, "MatMulNT");
  thread_local std::vector<T> bt;
  TransposeInto(b.data(), b.rows(), b.cols(), bt);
  simd::Kernels<T>().gemm_nn(a.rows(), b.rows(), a.cols(), a.data(), a.cols(),
                             bt.data(), b.rows(), c.data(), c.cols(), accumulate);
}

template <typename T>
void MatMulTN(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c,
              bool accumulate) {
  if (a.rows() != b.rows()) ShapeError("MatMulTN");
  PrepareOutput(c, a.cols(), b.cols(), accumulate, "MatMulTN");
  thread_local std::vector<T> at;
  TransposeInto(a.data(), a.rows(), a.cols(), at);
  simd::Kernels<T>().gemm_nn(a.cols(), b.cols(), a.rows(), at.data(), a.rows(),
                             b.data(), b.cols(), c.data(), c.cols(), accumulate);
}

template <typename T>
Matrix<T> Transpose(const Matrix<T>& a) {
  Matrix<T> out(a.cols(), a.rows());
  std::vector<T> tmp;
  TransposeInto(a.data(), a.rows(), a.cols(), tmp);
  out.storage() = std::move(tmp);
  return out;
}

#define POSIG_INSTANTIATE(T)                                              \
  template void MatMul<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&, \
                          bool);                                          \
  template void MatMulNT<T>(const Matrix<T>&, const Matrix<T>&,           \
                            Matrix<T>&, bool);                            \
  template void MatMulTN<T>(const Matrix<T>&, const Matrix<T>&,           \
                            Matrix<T>&, bool);                            \
  template Matrix<T> Transpose<T>(const Matrix<T>&);

POSIG_INSTANTIATE(float)
POSIG_INSTANTIATE(double)
#undef POSIG_INSTANTIATE

}  // namespace posig
