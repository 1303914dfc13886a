#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "lqp/engine.hpp"
#include "lqp/scene.hpp"

namespace lqp {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// JSON scene description. Throws ConfigError naming the file and field on any
// parse or validation problem. The obstacle sweep, if present, stays
// unresolved until resolve_with_seed picks the run seed.
SceneConfig load_scene_config(const std::filesystem::path& path);

// JSON engine profile: pipeline, learner and queue settings. n_stas and the
// pipeline frame rate are filled in from the scene at run time.
EngineConfig load_engine_config(const std::filesystem::path& path);

std::string scene_config_to_json(const SceneConfig& config);
std::string engine_config_to_json(const EngineConfig& config);

}  // namespace lqp
