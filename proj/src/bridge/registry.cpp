#include "voxagent/bridge/registry.hpp"

#include <algorithm>
#include <cmath>

#include "voxagent/error.hpp"

namespace voxagent::bridge {

using nlohmann::json;

namespace {

ParamSpec number(std::string name, std::string doc) {
  ParamSpec p;
  p.name = std::move(name);
  p.type = ParamType::Number;
  p.doc = std::move(doc);
  return p;
}

ParamSpec typed(std::string name, ParamType t, std::string doc) {
  ParamSpec p = number(std::move(name), std::move(doc));
  p.type = t;
  return p;
}

std::vector<ToolDescriptor> build_registry() {
  std::vector<ToolDescriptor> r;

  r.push_back({"list_series", 1, {}, "List the series (volumes) available in the study, in manifest order."});

  r.push_back({"select_series", 1, {typed("series_id", ParamType::String, "id returned by list_series")},
               "Make a series the active (displayed) series. Slice positions are kept."});

  {
    ParamSpec o = typed("orientation", ParamType::Enum, "viewing plane");
    o.choices = {"axial", "coronal", "sagittal"};
    r.push_back({"set_slice", 1,
                 {o, typed("index", ParamType::Integer, "slice index; out-of-range values are clamped")},
                 "Switch to a plane and scroll to a slice. The response reports the effective index."});
  }

  {
    ParamSpec width = number("width", "window width (> 0)");
    width.min = 0;
    width.min_exclusive = true;
    r.push_back({"set_window", 1, {number("center", "window centre (intensity units)"), width},
                 "Set the display window (linear intensity-to-gray mapping)."});
  }

  {
    ParamSpec alpha = number("alpha", "overlay weight in [0, 1]");
    alpha.min = 0;
    alpha.max = 1;
    r.push_back({"set_fusion", 1,
                 {typed("overlay_series", ParamType::String, "series blended over the active one"), alpha},
                 "Blend another series over the active series using the shared window."});
  }

  r.push_back({"render", 1, {}, "Render the current slice of the active series as an 8-bit PNG."});

  {
    ParamSpec label = typed("label", ParamType::String, "free-text label");
    label.required = false;
    label.default_value = "";
    r.push_back({"bookmark_view", 2, {label}, "Bookmark the current view; stores a render as evidence."});
  }

  r.push_back({"measure_distance", 2,
               {typed("p1", ParamType::Point3, "[x, y, z] in mm"), typed("p2", ParamType::Point3, "[x, y, z] in mm")},
               "Measure the straight-line distance between two world points (mm) and log it."});

  r.push_back({"export_evidence", 2, {}, "Export bookmarks, masks and measurements as an evidence bundle."});

  {
    ParamSpec radius = number("max_radius_mm", "growth limit around the seed (mm, > 0)");
    radius.min = 0;
    radius.min_exclusive = true;
    radius.required = false;
    radius.default_value = 50.0;
    r.push_back({"local_threshold_segment", 3,
                 {typed("seed_mm", ParamType::Point3, "[x, y, z] world seed in mm"),
                  number("lo", "lowest included intensity"), number("hi", "highest included intensity"), radius},
                 "Grow a 6-connected region from a world seed over voxels of the active series with intensity in "
                 "[lo, hi] within max_radius_mm. The seed must be accurate: a seed outside the target fails."});
  }

  r.push_back({"mask_stats", 3, {typed("mask_id", ParamType::String, "id returned by local_threshold_segment")},
               "Voxel count, volume, centroid, mean intensity and max diameter of a stored mask."});
  return r;
}

std::string describe_type(const ParamSpec& p) {
  switch (p.type) {
    case ParamType::Number: return "a number";
    case ParamType::Integer: return "an integer";
    case ParamType::String: return "a string";
    case ParamType::Enum: return "a string";
    case ParamType::Point3: return "an array of 3 numbers";
  }
  return "?";
}

std::optional<std::string> check_value(const ParamSpec& p, const json& v) {
  switch (p.type) {
    case ParamType::Number:
      if (!v.is_number()) return "expected " + describe_type(p);
      if (!std::isfinite(v.get<double>())) return "must be finite";
      break;
    case ParamType::Integer:
      if (!v.is_number_integer()) return "expected " + describe_type(p);
      break;
    case ParamType::String:
      if (!v.is_string()) return "expected " + describe_type(p);
      return std::nullopt;
    case ParamType::Enum:
      if (!v.is_string()) return "expected " + describe_type(p);
      if (std::find(p.choices.begin(), p.choices.end(), v.get<std::string>()) == p.choices.end()) {
        return "not one of the allowed values";
      }
      return std::nullopt;
    case ParamType::Point3:
      if (!v.is_array() || v.size() != 3) return "expected " + describe_type(p);
      for (const auto& c : v) {
        if (!c.is_number() || !std::isfinite(c.get<double>())) return "expected " + describe_type(p);
      }
      return std::nullopt;
  }
  const double x = v.get<double>();
  if (p.min && (p.min_exclusive ? !(x > *p.min) : !(x >= *p.min))) {
    return std::string("must be ") + (p.min_exclusive ? "> " : ">= ") + json(*p.min).dump();
  }
  if (p.max && !(x <= *p.max)) return "must be <= " + json(*p.max).dump();
  return std::nullopt;
}

}  // namespace

std::string_view param_type_tag(ParamType t) {
  switch (t) {
    case ParamType::Number: return "number";
    case ParamType::Integer: return "integer";
    case ParamType::String: return "string";
    case ParamType::Enum: return "enum";
    case ParamType::Point3: return "point3";
  }
  return "";
}

json ToolDescriptor::to_json() const {
  json ps = json::array();
  for (const auto& p : params) {
    json pj{{"name", p.name}, {"type", param_type_tag(p.type)}, {"required", p.required}, {"doc", p.doc}};
    if (!p.required) pj["default"] = p.default_value;
    if (p.min) pj[p.min_exclusive ? "exclusive_min" : "min"] = *p.min;
    if (p.max) pj["max"] = *p.max;
    if (!p.choices.empty()) pj["choices"] = p.choices;
    ps.push_back(std::move(pj));
  }
  return {{"name", name}, {"layer", layer}, {"params", ps}, {"description", description}};
}

const std::vector<ToolDescriptor>& tool_registry() {
  static const std::vector<ToolDescriptor> registry = build_registry();
  return registry;
}

const ToolDescriptor* find_tool(std::string_view name) {
  for (const auto& t : tool_registry()) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

TrackPolicy TrackPolicy::for_track(Track t, int budget) {
  TrackPolicy p;
  p.track = t;
  p.allowed_layers = t == Track::A ? std::set<int>{1, 2} : std::set<int>{1, 2, 3};
  p.tool_budget = budget;
  return p;
}

std::vector<ToolDescriptor> catalog(const TrackPolicy& policy) {
  std::vector<ToolDescriptor> out;
  for (const auto& t : tool_registry()) {
    if (policy.allows(t.layer)) out.push_back(t);
  }
  return out;
}

json validate_call(const ToolDescriptor& tool, const json& args) {
  json problems = json::object();
  if (!args.is_object()) {
    problems["$"] = "arguments must be an object";
    throw Error(Errc::BadArgs, "invalid arguments for " + tool.name, problems);
  }
  json normalized = json::object();
  for (const auto& p : tool.params) {
    auto it = args.find(p.name);
    if (it == args.end()) {
      if (p.required) {
        problems[p.name] = "missing required argument";
      } else {
        normalized[p.name] = p.default_value;
      }
      continue;
    }
    if (auto why = check_value(p, *it)) {
      problems[p.name] = *why;
    } else {
      normalized[p.name] = *it;
    }
  }
  for (const auto& [key, _] : args.items()) {
    const bool known = std::any_of(tool.params.begin(), tool.params.end(), [&](const ParamSpec& p) { return p.name == key; });
    if (!known) problems[key] = "unknown argument";
  }
  if (!problems.empty()) throw Error(Errc::BadArgs, "invalid arguments for " + tool.name, problems);
  return normalized;
}

}  // namespace voxagent::bridge
