// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "mlasr/model.hpp"

namespace mlasr {

// Single-file archive of every tensor in a System, keyed by the parameter's
// stable path string ("backbone/layer3/q_proj/W", "lora/lang1/ctc/A", ...),
// each serialized as a shape header plus little-endian float64 payload. A
// "meta" blob entry records kind, language count and configs so the file
// round-trips without outside context.
void save_system(const System& sys, const std::filesystem::path& path,
                 const std::string& config_hash);

struct LoadedSystem {
  System system;
  std::string config_hash;
};

LoadedSystem load_system(const std::filesystem::path& path);

}  // namespace mlasr
