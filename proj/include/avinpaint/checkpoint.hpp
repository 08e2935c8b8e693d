// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>

#include "avinpaint/params.hpp"
#include "json.hpp"

namespace avi {

// Versioned binary container: magic, format version, a JSON header (module
// name plus arbitrary hyperparameters), then named float64 arrays.
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const std::string& module_name,
                     const nlohmann::json& header, const ParamSet& params);

struct LoadedCheckpoint {
    std::string module_name;
    nlohmann::json header;
    ParamSet params;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace avi
