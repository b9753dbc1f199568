#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "lipnav/freespace.hpp"
#include "lipnav/rrt.hpp"
#include "lipnav/scenario.hpp"
#include "lipnav/sim.hpp"

namespace lipnav::svg {

struct RenderInputs {
  const Scenario* scenario = nullptr;                    // required
  const freespace::FreeSpaceChain* chain = nullptr;      // optional
  const rrt::PathPlan* plan = nullptr;                   // optional
  const sim::TrajectoryLog* log = nullptr;               // optional
};

/// Deterministic SVG figure: workspace, raw obstacles with inflated
/// outlines, free cells, waypoints, the seed path, the COM trajectory with
/// footstep markers, and moving-obstacle traces.
std::string render_svg(const RenderInputs& in);

void render_svg_file(const RenderInputs& in, const std::filesystem::path& file);

}  // namespace lipnav::svg
