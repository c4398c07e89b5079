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

#include "posig/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "posig/errors.hpp"

namespace posig {

namespace {

constexpr char kMagic[8] = {'P', 'O', 'S', 'I', 'G', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written in native little-endian order");

template <typename T>
constexpr const char* DtypeName() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

}  // namespace

template <typename T>
void Checkpoint::Put(const std::string& name, const Matrix<T>& m) {
  Insert({name, m.rows(), m.cols(), std::vector<T>(m.storage())});
}

void Checkpoint::PutVector(const std::string& name, std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  Insert({name, 1, n, std::move(v)});
}

void Checkpoint::Insert(NamedArray a) {
  for (auto& existing : arrays_)
    if (existing.name == a.name) {
      existing = std::move(a);
      return;
    }
  arrays_.push_back(std::move(a));
}

const NamedArray* Checkpoint::Find(const std::string& name) const {
  for (const auto& a : arrays_)
    if (a.name == name) return &a;
  return nullptr;
}

template <typename T>
Matrix<T> Checkpoint::Get(const std::string& name) const {
  const NamedArray* a = Find(name);
  if (a == nullptr) throw InvalidInput("checkpoint: missing array " + name);
  const auto* data = std::get_if<std::vector<T>>(&a->data);
  if (data == nullptr)
    throw InvalidInput("checkpoint: array " + name + " is not " + DtypeName<T>());
  Matrix<T> m(a->rows, a->cols);
  m.storage() = *data;
  return m;
}

std::vector<double> Checkpoint::GetVector(const std::string& name) const {
  return Get<double>(name).storage();
}

void Checkpoint::Write(std::ostream& out) const {
  nlohmann::json header;
  header["format"] = "posig-checkpoint";
  header["version"] = kCheckpointVersion;
  header["meta"] = meta;
  nlohmann::json entries = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& a : arrays_) {
    const bool f32 = std::holds_alternative<std::vector<float>>(a.data);
    const uint64_t bytes = static_cast<uint64_t>(a.rows) * a.cols * (f32 ? 4 : 8);
    entries.push_back({{"name", a.name}, {"dtype", f32 ? "f32" : "f64"},
                       {"rows", a.rows}, {"cols", a.cols}, {"offset", offset}});
    offset += bytes;
  }
  header["arrays"] = entries;
  const std::string text = header.dump();
  const uint64_t len = text.size();
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& a : arrays_)
    std::visit([&](const auto& v) {
      out.write(reinterpret_cast<const char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(v[0])));
    }, a.data);
  if (!out) throw NumericalFailure("checkpoint: write failed");
}

void Checkpoint::WriteFile(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("checkpoint: cannot open " + tmp);
    Write(out);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::Read(std::istream& in) {
  char magic[8];
  uint64_t len = 0;
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw InvalidInput("checkpoint: bad magic");
  if (!in.read(reinterpret_cast<char*>(&len), sizeof(len)) || len > (1ull << 32))
    throw InvalidInput("checkpoint: bad header length");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len)))
    throw InvalidInput("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("checkpoint: malformed header: ") + e.what());
  }
  if (header.value("format", "") != "posig-checkpoint")
    throw InvalidInput("checkpoint: unknown format");
  if (header.value("version", -1) != kCheckpointVersion)
    throw InvalidInput("checkpoint: unsupported version " + header["version"].dump());

  Checkpoint ck;
  ck.meta = header["meta"];
  for (const auto& e : header["arrays"]) {
    NamedArray a;
    a.name = e.at("name").get<std::string>();
    a.rows = e.at("rows").get<int>();
    a.cols = e.at("cols").get<int>();
    if (a.rows < 0 || a.cols < 0) throw InvalidInput("checkpoint: negative shape");
    const size_t n = static_cast<size_t>(a.rows) * a.cols;
    const std::string dtype = e.at("dtype").get<std::string>();
    auto read = [&](auto& v) {
      v.resize(n);
      if (!in.read(reinterpret_cast<char*>(v.data()),
                   static_cast<std::streamsize>(n * sizeof(v[0]))))
        throw InvalidInput("checkpoint: truncated array " + a.name);
    };
    if (dtype == "f32") {
      std::vector<float> v;
      read(v);
      a.data = std::move(v);
    } else if (dtype == "f64") {
      std::vector<double> v;
      read(v);
      a.data = std::move(v);
    } else {
      throw InvalidInput("checkpoint: unknown dtype " + dtype);
    }
    ck.arrays_.push_back(std::move(a));
  }
  return ck;
}

Checkpoint Checkpoint::ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("checkpoint: cannot open " + path);
  return Read(in);
}

template <typename T>
void PutParams(Checkpoint& ck, const std::string& prefix, const ParamStore<T>& store) {
  for (const auto& p : store.all()) ck.Put(prefix + "/" + p->name, p->value);
}

template <typename T>
void GetParams(const Checkpoint& ck, const std::string& prefix, ParamStore<T>& store) {
  for (const auto& p : store.all()) {
    Matrix<T> m = ck.Get<T>(prefix + "/" + p->name);
    if (!m.SameShape(p->value))
      throw InvalidInput("checkpoint: shape mismatch for " + p->name);
    p->value = std::move(m);
  }
}

template <typename T>
void PutAdam(Checkpoint& ck, const std::string& prefix, const Adam<T>& opt) {
  ck.meta["optimizers"][prefix] = {{"steps", opt.steps()}, {"lr", opt.lr()}};
  for (size_t k = 0; k < opt.params().size(); ++k) {
    ck.PutVector(prefix + "/m/" + std::to_string(k), opt.first_moments()[k]);
    ck.PutVector(prefix + "/v/" + std::to_string(k), opt.second_moments()[k]);
  }
}

template <typename T>
void GetAdam(const Checkpoint& ck, const std::string& prefix, Adam<T>& opt) {
  const auto it = ck.meta.find("optimizers");
  if (it == ck.meta.end() || !it->contains(prefix))
    throw InvalidInput("checkpoint: missing optimizer " + prefix);
  const auto& info = (*it)[prefix];
  std::vector<std::vector<double>> m, v;
  for (size_t k = 0; k < opt.params().size(); ++k) {
    m.push_back(ck.GetVector(prefix + "/m/" + std::to_string(k)));
    v.push_back(ck.GetVector(prefix + "/v/" + std::to_string(k)));
  }
  opt.RestoreState(info.at("steps").get<int64_t>(), std::move(m), std::move(v));
  opt.set_lr(info.at("lr").get<double>());
}

template void Checkpoint::Put<float>(const std::string&, const Matrix<float>&);
template void Checkpoint::Put<double>(const std::string&, const Matrix<double>&);
template Matrix<float> Checkpoint::Get<float>(const std::string&) const;
template Matrix<double> Checkpoint::Get<double>(const std::string&) const;
template void PutParams(Checkpoint&, const std::string&, const ParamStore<float>&);
template void PutParams(Checkpoint&, const std::string&, const ParamStore<double>&);
template void GetParams(const Checkpoint&, const std::string&, ParamStore<float>&);
template void GetParams(const Checkpoint&, const std::string&, ParamStore<double>&);
template void PutAdam(Checkpoint&, const std::string&, const Adam<float>&);
template void PutAdam(Checkpoint&, const std::string&, const Adam<double>&);
template void GetAdam(const Checkpoint&, const std::string&, Adam<float>&);
template void GetAdam(const Checkpoint&, const std::string&, Adam<double>&);

}  // namespace posig
