#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "voxagent/runtime/agent.hpp"

namespace voxagent::runtime {

/// Chance baseline: no tool calls; each MCQ task answered uniformly from its
/// options (deterministic in (seed, episode rng_seed)); OPEN tasks get "unknown".
std::unique_ptr<Agent> random_agent(std::uint64_t seed);

/// Sealed-side knowledge handed to the oracle, never to the viewer.
struct OracleKnowledge {
  GroundTruth truth;
  std::vector<TaskSpec> tasks;  // with options, even under the OPEN protocol
};
using KnowledgeLookup = std::function<OracleKnowledge(const std::string& study_id)>;

enum class OracleMode { Viewer, Tools };

/// VIEWER: navigates to the finding (list, select, window, slice, render,
/// bookmark) and answers the truth.
/// TOOLS (chest): segments the PET lesion from the true centroid plus
/// Gaussian noise of scale seed_noise_mm per axis and derives location,
/// T stage, histology and grade from the mask; N stage comes from the truth.
/// A failed segmentation falls back to the first option. Brain studies are
/// answered with the VIEWER script in either mode.
std::unique_ptr<Agent> oracle_agent(OracleMode mode, double seed_noise_mm, KnowledgeLookup lookup);

}  // namespace voxagent::runtime
