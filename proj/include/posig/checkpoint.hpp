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

#pragma once

// Self-describing checkpoint container.
//
// Layout: the 8-byte magic "POSIGCKP", a little-endian uint64 header length,
// a JSON header, then the raw array payloads back to back. The header holds
// the format version, free-form metadata (configuration, counters) and one
// entry per array: name, dtype ("f32" or "f64"), rows, cols, byte offset.
// Arrays are stored as their exact bit patterns, so a round trip is exact.

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "posig/matrix.hpp"
#include "posig/optimizer.hpp"

namespace posig {

inline constexpr int kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::variant<std::vector<float>, std::vector<double>> data;

  friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

class Checkpoint {
 public:
  nlohmann::json meta = nlohmann::json::object();

  template <typename T>
  void Put(const std::string& name, const Matrix<T>& m);
  void PutVector(const std::string& name, std::vector<double> v);

  bool Has(const std::string& name) const { return Find(name) != nullptr; }
  // Throws InvalidInput when the array is missing or has another dtype.
  template <typename T>
  Matrix<T> Get(const std::string& name) const;
  std::vector<double> GetVector(const std::string& name) const;

  const std::vector<NamedArray>& arrays() const { return arrays_; }

  void Write(std::ostream& out) const;
  void WriteFile(const std::string& path) const;  // via a temporary + rename
  static Checkpoint Read(std::istream& in);
  static Checkpoint ReadFile(const std::string& path);

  friend bool operator==(const Checkpoint& a, const Checkpoint& b) {
    return a.meta == b.meta && a.arrays_ == b.arrays_;
  }

 private:
  const NamedArray* Find(const std::string& name) const;
  void Insert(NamedArray a);

  std::vector<NamedArray> arrays_;
};

// Parameters are stored as "<prefix>/<parameter name>".
template <typename T>
void PutParams(Checkpoint& ck, const std::string& prefix, const ParamStore<T>& store);
template <typename T>
void GetParams(const Checkpoint& ck, const std::string& prefix, ParamStore<T>& store);

// Moments as "<prefix>/m/<k>" and "<prefix>/v/<k>", step count in meta.
template <typename T>
void PutAdam(Checkpoint& ck, const std::string& prefix, const Adam<T>& opt);
template <typename T>
void GetAdam(const Checkpoint& ck, const std::string& prefix, Adam<T>& opt);

}  // namespace posig
