#include "lipnav/svg_render.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace lipnav::svg {

namespace {

constexpr double kScale = 20.0;  // pixels per meter
constexpr double kPad = 12.0;

struct Mapper {
  const geom::Box& ws;
  double x(double wx) const { return kPad + (wx - ws.xmin) * kScale; }
  double y(double wy) const { return kPad + (ws.ymax - wy) * kScale; }  // y grows up
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void polygon_element(std::string& out, const Mapper& m, const std::vector<Point2>& verts,
                     const std::string& style) {
  out += "<polygon points=\"";
  for (const Point2& v : verts) out += fmt(m.x(v.x())) + "," + fmt(m.y(v.y())) + " ";
  out += "\" " + style + "/>\n";
}

void polyline_element(std::string& out, const Mapper& m, const std::vector<Point2>& pts,
                      const std::string& style) {
  out += "<polyline points=\"";
  for (const Point2& p : pts) out += fmt(m.x(p.x())) + "," + fmt(m.y(p.y())) + " ";
  out += "\" fill=\"none\" " + style + "/>\n";
}

void circle_element(std::string& out, const Mapper& m, const Point2& c, double r_px,
                    const std::string& style) {
  out += "<circle cx=\"" + fmt(m.x(c.x())) + "\" cy=\"" + fmt(m.y(c.y())) + "\" r=\"" +
         fmt(r_px) + "\" " + style + "/>\n";
}

void ellipse_element(std::string& out, const Mapper& m, const Point2& c, double a,
                     double b, double phi, const std::string& style) {
  out += "<ellipse cx=\"" + fmt(m.x(c.x())) + "\" cy=\"" + fmt(m.y(c.y())) + "\" rx=\"" +
         fmt(a * kScale) + "\" ry=\"" + fmt(b * kScale) + "\" transform=\"rotate(" +
         fmt(phi * 180.0 / M_PI) + " " + fmt(m.x(c.x())) + " " + fmt(m.y(c.y())) +
         ")\" " + style + "/>\n";
}

}  // namespace

std::string render_svg(const RenderInputs& in) {
  if (!in.scenario) throw std::invalid_argument("render_svg needs a scenario");
  const Scenario& sc = *in.scenario;
  const geom::Box& ws = sc.workspace;
  const Mapper m{ws};
  const double width = ws.width() * kScale + 2 * kPad;
  const double height = ws.height() * kScale + 2 * kPad;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
         "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " +
         fmt(height) + "\">\n";
  out += "<rect x=\"" + fmt(m.x(ws.xmin)) + "\" y=\"" + fmt(m.y(ws.ymax)) + "\" width=\"" +
         fmt(ws.width() * kScale) + "\" height=\"" + fmt(ws.height() * kScale) +
         "\" fill=\"#fcfcfc\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n";

  // Free cells below everything else.
  if (in.chain) {
    for (const geom::Polytope& cell : in.chain->cells) {
      const auto verts = cell.vertices();
      if (verts.size() >= 3)
        polygon_element(out, m, verts,
                        "fill=\"#4a90d9\" fill-opacity=\"0.10\" stroke=\"#4a90d9\" "
                        "stroke-opacity=\"0.5\" stroke-width=\"0.8\"");
    }
  }

  // Inflated outlines, then raw obstacles on top.
  const geom::StaticMap map = sc.static_map();
  for (const geom::ConvexPolygon& obs : map.obstacles) {
    polygon_element(out, m, obs.vertices(),
                    "fill=\"none\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\" "
                    "stroke-width=\"0.8\"");
  }
  for (const geom::ConvexPolygon& obs : sc.raw_obstacles) {
    polygon_element(out, m, obs.vertices(), "fill=\"#555555\"");
  }

  if (in.plan) {
    polyline_element(out, m, in.plan->points,
                     "stroke=\"#222222\" stroke-width=\"1\" stroke-dasharray=\"2 2\"");
  }

  if (in.chain) {
    for (const Point2& w : in.chain->waypoints) {
      circle_element(out, m, w, 3.5, "fill=\"#f5a623\" stroke=\"#9a6400\"");
    }
  }

  if (in.log && !in.log->steps.empty()) {
    std::vector<Point2> com;
    com.reserve(in.log->steps.size() + 1);
    for (const sim::StepRecord& r : in.log->steps) com.push_back(lip::output(r.state));
    com.push_back(lip::output(in.log->final_state));
    polyline_element(out, m, com, "stroke=\"#d0021b\" stroke-width=\"1.6\"");

    for (const sim::StepRecord& r : in.log->steps) {
      const Point2 foot(r.state.x + r.input.ux, r.state.y + r.input.uy);
      circle_element(out, m, foot, 1.8,
                     r.stance == lip::Stance::Left
                         ? "fill=\"#7ed321\" fill-opacity=\"0.7\""
                         : "fill=\"#f8e71c\" fill-opacity=\"0.7\"");
    }

    // Moving-obstacle traces sampled every two seconds.
    for (const MovingObstacleSpec& mo : sc.moving_obstacles) {
      const double t_end = in.log->steps.back().t + sc.lip_params.step_duration;
      for (double t = 0.0; t <= t_end + 1e-9; t += 2.0) {
        ellipse_element(out, m, mo.center.at(t), mo.semi_axis_a, mo.semi_axis_b,
                        mo.orientation.at(t),
                        "fill=\"#9013fe\" fill-opacity=\"0.08\" stroke=\"#9013fe\" "
                        "stroke-width=\"0.7\"");
      }
    }
  } else {
    for (const MovingObstacleSpec& mo : sc.moving_obstacles) {
      ellipse_element(out, m, mo.center.at(0.0), mo.semi_axis_a, mo.semi_axis_b,
                      mo.orientation.at(0.0),
                      "fill=\"#9013fe\" fill-opacity=\"0.15\" stroke=\"#9013fe\"");
    }
  }

  circle_element(out, m, sc.start, 4.0, "fill=\"#417505\"");
  circle_element(out, m, sc.goal, 4.0, "fill=\"#d0021b\" stroke=\"#7a0110\"");
  out += "</svg>\n";
  return out;
}

void render_svg_file(const RenderInputs& in, const std::filesystem::path& file) {
  std::ofstream f(file);
  if (!f) throw std::runtime_error(file.string() + ": cannot open for writing");
  f << render_svg(in);
}

}  // namespace lipnav::svg
