#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "voxagent/episode.hpp"

namespace voxagent::bridge {

enum class ParamType { Number, Integer, String, Enum, Point3 };
std::string_view param_type_tag(ParamType t);

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::Number;
  bool required = true;
  nlohmann::json default_value = nullptr;  // used when !required
  std::optional<double> min;
  std::optional<double> max;
  bool min_exclusive = false;
  std::vector<std::string> choices;  // Enum only
  std::string doc;
};

/// One agent-callable operation. Layer 1: primitive viewer actions;
/// layer 2: evidence operations; layer 3: expert tools.
struct ToolDescriptor {
  std::string name;
  int layer = 1;
  std::vector<ParamSpec> params;
  std::string description;

  nlohmann::json to_json() const;
};

/// The full registered surface, in catalog order. Nothing outside this
/// list is reachable through the bridge.
const std::vector<ToolDescriptor>& tool_registry();
const ToolDescriptor* find_tool(std::string_view name);

struct TrackPolicy {
  Track track = Track::A;
  std::set<int> allowed_layers{1, 2};
  int tool_budget = kDefaultToolBudget;

  static TrackPolicy for_track(Track t, int budget = kDefaultToolBudget);
  bool allows(int layer) const { return allowed_layers.contains(layer); }
};

/// Descriptors whose layer the policy allows, registry order.
std::vector<ToolDescriptor> catalog(const TrackPolicy& policy);

/// Strict closed-schema validation: exact JSON types (no coercion), ranges,
/// required/unknown keys, defaults filled in. Returns the normalized args
/// object. Throws Error(BadArgs) whose detail maps field -> message.
nlohmann::json validate_call(const ToolDescriptor& tool, const nlohmann::json& args);

}  // namespace voxagent::bridge
