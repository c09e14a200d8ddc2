// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dc/encoder.hpp"

namespace dc {

// FSTK container, little-endian throughout.
//
// Version 1 (feature stack):
//   magic "FSTK", u32 version=1, u32 entry_count, u32 N, u32 D_v,
//   u16 Hp, u16 Wp, u8 dtype (0=f32, 1=f64), u8 reserved=0,
//   then entries in order, each row-major token-major.
//   Attention is not serialized.
//
// Version 2 (named tensors, used for parameters and embeddings):
//   magic "FSTK", u32 version=2, u32 tensor_count, then per tensor:
//   u16 name_len, name bytes, u8 dtype, u8 rank, u32 dims[rank], payload.

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1 };

void save_stack(const FeatureStack& s, const std::string& path, Dtype dtype = Dtype::f64);
FeatureStack load_stack(const std::string& path);

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void save_tensors(const NamedTensors& tensors, const std::string& path, Dtype dtype = Dtype::f64);
NamedTensors load_tensors(const std::string& path);

// Video input: either a directory of *.fstk stacks (sorted by filename) or a
// single file of back-to-back version-1 stacks.
std::vector<FeatureStack> load_stack_sequence(const std::string& path);
void save_stack_sequence(const std::vector<FeatureStack>& frames, const std::string& path,
                         Dtype dtype = Dtype::f64);

}  // namespace dc
