/*
 * Copyright 2026 The tccml Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "tccml/error.hpp"
#include "tccml/model.hpp"
#include "tccml/optimizer.hpp"

// Checkpoint layout (all integers little-endian u64):
//   "TCCML1" | d | n_users | n_items | users f32[n_users*d] | items f32[n_items*d]
// followed by optional sections, each a 4-byte tag:
//   "FEAT" | n_tags | features f32[n_tags*d]
//   "ADAM" | step | moment-1 then moment-2, each users/items/features as f64

namespace tccml {

inline constexpr char kCheckpointMagic[6] = {'T', 'C', 'C', 'M', 'L', '1'};

struct Checkpoint {
  EmbeddingModel model;
  std::optional<AdamState> adam;
};

namespace detail {

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const char*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) bytes_.push_back(char((v >> (8 * k)) & 0xff));
  }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) bytes_.push_back(char((v >> (8 * k)) & 0xff));
  }
  void f32_matrix(const RowMatrix& m) {
    for (double x : m.data()) u32(std::bit_cast<std::uint32_t>(float(x)));
  }
  void f64_matrix(const RowMatrix& m) {
    for (double x : m.data()) u64(std::bit_cast<std::uint64_t>(x));
  }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> bytes, std::string source)
    : bytes_(std::move(bytes)), source_(std::move(source)) {}

  bool at_end() const { return pos_ == bytes_.size(); }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(source_ + ": truncated checkpoint");
  }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(std::uint8_t(bytes_[pos_ + k])) << (8 * k);
    pos_ += 8;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(std::uint8_t(bytes_[pos_ + k])) << (8 * k);
    pos_ += 4;
    return v;
  }
  RowMatrix f32_matrix(std::size_t rows, std::size_t cols) {
    check_size(rows, cols, 4);
    RowMatrix m(rows, cols);
    for (double& x : m.data()) x = double(std::bit_cast<float>(u32()));
    return m;
  }
  RowMatrix f64_matrix(std::size_t rows, std::size_t cols) {
    check_size(rows, cols, 8);
    RowMatrix m(rows, cols);
    for (double& x : m.data()) x = std::bit_cast<double>(u64());
    return m;
  }
  const std::string& source() const { return source_; }

 private:
  void check_size(std::size_t rows, std::size_t cols, std::size_t width) const {
    if (cols != 0 && rows > (bytes_.size() - pos_) / cols / width) {
      throw FormatError(source_ + ": truncated checkpoint");
    }
    need(rows * cols * width);
  }

  std::vector<char> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const EmbeddingModel& model,
                            const AdamState* adam = nullptr) {
  detail::ByteWriter w;
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u64(model.dim());
  w.u64(model.n_users());
  w.u64(model.n_items());
  w.f32_matrix(model.users);
  w.f32_matrix(model.items);
  if (model.features.rows() > 0) {
    w.raw("FEAT", 4);
    w.u64(model.features.rows());
    w.f32_matrix(model.features);
  }
  if (adam) {
    w.raw("ADAM", 4);
    w.u64(adam->step);
    for (const EmbeddingModel* m : {&adam->first, &adam->second}) {
      w.f64_matrix(m->users);
      w.f64_matrix(m->items);
      w.f64_matrix(m->features);
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write checkpoint '" + path.string() + "'");
  out.write(w.bytes().data(), std::streamsize(w.bytes().size()));
  if (!out) throw IngestError("failed writing checkpoint '" + path.string() + "'");
}

/// Loads a checkpoint; user/item rows are re-projected to absorb f32 rounding.
inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open checkpoint '" + path.string() + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  detail::ByteReader r(std::move(bytes), path.string());

  char magic[6];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw FormatError(path.string() + ": not a tccml checkpoint (bad magic)");
  }
  const std::size_t d = r.u64(), nu = r.u64(), ni = r.u64();
  if (d == 0) throw FormatError(path.string() + ": zero embedding dimension");
  Checkpoint ck;
  ck.model.users = r.f32_matrix(nu, d);
  ck.model.items = r.f32_matrix(ni, d);
  ck.model.features = RowMatrix(0, d);
  while (!r.at_end()) {
    char tag[4];
    r.raw(tag, 4);
    if (std::memcmp(tag, "FEAT", 4) == 0) {
      const std::size_t nt = r.u64();
      ck.model.features = r.f32_matrix(nt, d);
    } else if (std::memcmp(tag, "ADAM", 4) == 0) {
      AdamState adam = AdamState::like(ck.model);
      adam.step = r.u64();
      for (EmbeddingModel* m : {&adam.first, &adam.second}) {
        m->users = r.f64_matrix(nu, d);
        m->items = r.f64_matrix(ni, d);
        m->features = r.f64_matrix(ck.model.features.rows(), d);
      }
      ck.adam = std::move(adam);
    } else {
      throw FormatError(path.string() + ": unknown checkpoint section '" +
                        std::string(tag, 4) + "'");
    }
  }
  for (RowMatrix* m : {&ck.model.users, &ck.model.items}) {
    for (std::size_t i = 0; i < m->rows(); ++i) {
      for (double x : m->row(i)) {
        if (!std::isfinite(x)) throw FormatError(path.string() + ": non-finite embedding");
      }
      project_row(m->row(i));
    }
  }
  return ck;
}

}  // namespace tccml
