#include "srgeo/grid.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "srgeo/errors.hpp"

namespace srgeo {

namespace {

int wrap_index(int j, int n) {
  j %= n;
  if (j < 0) j += n;
  return j;
}

}  // namespace

std::array<int, 3> Grid3D::nearest_node(double x, double y,
                                        double theta) const {
  int i;
  if (preset == GroupPreset::SO3) {
    i = static_cast<int>(std::lround((x + kHalfPi) / dx));
  } else {
    i = static_cast<int>(std::lround((x - x0) / dx));
  }
  if (i < 0 || i >= nx) throw ConfigError("Grid3D: x outside the grid");

  int j;
  if (y_periodic()) {
    j = wrap_index(static_cast<int>(std::lround(y / dy)), ny);
  } else {
    j = static_cast<int>(std::lround((y - y0) / dy));
    if (j < 0 || j >= ny) throw ConfigError("Grid3D: y outside the grid");
  }
  const int k = wrap_index(static_cast<int>(std::lround(theta / dt)), nt);
  return {i, j, k};
}

double Grid3D::min_spacing() const { return std::min({dx, dy, dt}); }

Grid3D make_so3_grid(int nx, int ny, int nt) {
  if (nx < 5 || ny < 5 || nt < 5) throw ConfigError("grid too small");
  if (nx % 2 == 0) throw ConfigError("SO3 grid needs odd nx (seed at x = 0)");
  Grid3D g;
  g.preset = GroupPreset::SO3;
  g.nx = nx;
  g.ny = ny;
  g.nt = nt;
  g.dx = kPi / (nx - 1);
  g.dy = kTwoPi / ny;
  g.dt = kTwoPi / nt;
  return g;
}

Grid3D make_se2_grid(int nx, int ny, int nt, double x_halfwidth,
                     double y_halfwidth) {
  if (nx < 5 || ny < 5 || nt < 5) throw ConfigError("grid too small");
  if (nx % 2 == 0 || ny % 2 == 0) {
    throw ConfigError("SE2 grid needs odd nx, ny (seed at the origin)");
  }
  Grid3D g;
  g.preset = GroupPreset::SE2;
  g.nx = nx;
  g.ny = ny;
  g.nt = nt;
  g.x0 = -x_halfwidth;
  g.y0 = -y_halfwidth;
  g.dx = 2.0 * x_halfwidth / (nx - 1);
  g.dy = 2.0 * y_halfwidth / (ny - 1);
  g.dt = kTwoPi / nt;
  return g;
}

namespace {

struct RawHeader {
  char magic[4];
  std::uint32_t version;
  std::uint8_t preset;
  std::uint32_t nx, ny, nt;
  double dx, dy, dt;
  double xi, eps;
};

void write_header(std::ofstream& out, const Grid3D& g, double xi, double eps) {
  out.write("SRFM", 4);
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint8_t preset = static_cast<std::uint8_t>(g.preset);
  out.write(reinterpret_cast<const char*>(&preset), 1);
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(g.nx),
                                 static_cast<std::uint32_t>(g.ny),
                                 static_cast<std::uint32_t>(g.nt)};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  const double spacing[3] = {g.dx, g.dy, g.dt};
  out.write(reinterpret_cast<const char*>(spacing), sizeof(spacing));
  out.write(reinterpret_cast<const char*>(&xi), 8);
  out.write(reinterpret_cast<const char*>(&eps), 8);
}

RawHeader read_header(std::ifstream& in, const std::string& path) {
  RawHeader h{};
  in.read(h.magic, 4);
  if (!in || std::memcmp(h.magic, "SRFM", 4) != 0) {
    throw ConfigError("not an SRFM grid file: " + path);
  }
  in.read(reinterpret_cast<char*>(&h.version), 4);
  in.read(reinterpret_cast<char*>(&h.preset), 1);
  std::uint32_t dims[3];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  h.nx = dims[0];
  h.ny = dims[1];
  h.nt = dims[2];
  double spacing[3];
  in.read(reinterpret_cast<char*>(spacing), sizeof(spacing));
  h.dx = spacing[0];
  h.dy = spacing[1];
  h.dt = spacing[2];
  in.read(reinterpret_cast<char*>(&h.xi), 8);
  in.read(reinterpret_cast<char*>(&h.eps), 8);
  if (!in) throw ConfigError("truncated SRFM header: " + path);
  if (h.version != 1) throw ConfigError("unsupported SRFM version");
  return h;
}

}  // namespace

void save_distance_grid(const DistanceGrid& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  write_header(out, d.grid, d.metric.xi, d.metric.eps);
  out.write(reinterpret_cast<const char*>(d.w.data()),
            static_cast<std::streamsize>(d.w.size() * sizeof(double)));
  if (!out) throw ConfigError("failed writing " + path);

  nlohmann::json j;
  j["kind"] = "distance";
  j["preset"] = d.grid.preset == GroupPreset::SO3 ? "so3" : "se2";
  j["cuspless"] = d.cuspless;
  j["seed"] = {d.seed[0], d.seed[1], d.seed[2]};
  j["seed_chart"] = {d.grid.xc(d.seed[0]), d.grid.yc(d.seed[1]),
                     d.grid.tc(d.seed[2])};
  j["x0"] = d.grid.x0;
  j["y0"] = d.grid.y0;
  j["xi"] = d.metric.xi;
  j["eps"] = d.metric.eps;
  j["uniform_cost"] = d.metric.cost_xy.empty();
  j["stats"] = {{"pops", d.stats.pops},
                {"reopened", d.stats.reopened},
                {"causality_violations", d.stats.causality_violations}};
  std::ofstream side(path + ".json");
  side << j.dump(2) << "\n";
}

DistanceGrid load_distance_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  const RawHeader h = read_header(in, path);

  DistanceGrid d;
  d.grid.preset = static_cast<GroupPreset>(h.preset);
  d.grid.nx = static_cast<int>(h.nx);
  d.grid.ny = static_cast<int>(h.ny);
  d.grid.nt = static_cast<int>(h.nt);
  d.grid.dx = h.dx;
  d.grid.dy = h.dy;
  d.grid.dt = h.dt;
  d.metric.xi = h.xi;
  d.metric.eps = h.eps;
  d.metric.preset = d.grid.preset;
  d.w.resize(d.grid.size());
  in.read(reinterpret_cast<char*>(d.w.data()),
          static_cast<std::streamsize>(d.w.size() * sizeof(double)));
  if (!in) throw ConfigError("truncated SRFM payload: " + path);

  std::ifstream side(path + ".json");
  if (side) {
    nlohmann::json j;
    side >> j;
    d.cuspless = j.value("cuspless", false);
    if (j.contains("seed")) {
      d.seed = {j["seed"][0].get<int>(), j["seed"][1].get<int>(),
                j["seed"][2].get<int>()};
    }
    d.grid.x0 = j.value("x0", 0.0);
    d.grid.y0 = j.value("y0", 0.0);
  }
  d.state.assign(d.grid.size(), NodeState::Accepted);
  for (std::size_t idx = 0; idx < d.w.size(); ++idx) {
    if (!std::isfinite(d.w[idx])) d.state[idx] = NodeState::Excluded;
  }
  return d;
}

void save_cost_grid(const CostGridFile& c, const std::string& path) {
  if (c.grid.nt != 1) throw ConfigError("cost grid must have nt = 1");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  write_header(out, c.grid, 0.0, 0.0);
  out.write(reinterpret_cast<const char*>(c.values.data()),
            static_cast<std::streamsize>(c.values.size() * sizeof(double)));
  nlohmann::json j;
  j["kind"] = "cost";
  j["preset"] = c.grid.preset == GroupPreset::SO3 ? "so3" : "se2";
  j["x0"] = c.grid.x0;
  j["y0"] = c.grid.y0;
  std::ofstream side(path + ".json");
  side << j.dump(2) << "\n";
}

CostGridFile load_cost_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  const RawHeader h = read_header(in, path);
  if (h.nt != 1) throw ConfigError("not a 2D cost grid: " + path);
  CostGridFile c;
  c.grid.preset = static_cast<GroupPreset>(h.preset);
  c.grid.nx = static_cast<int>(h.nx);
  c.grid.ny = static_cast<int>(h.ny);
  c.grid.nt = 1;
  c.grid.dx = h.dx;
  c.grid.dy = h.dy;
  c.grid.dt = h.dt;
  c.values.resize(static_cast<std::size_t>(c.grid.nx) * c.grid.ny);
  in.read(reinterpret_cast<char*>(c.values.data()),
          static_cast<std::streamsize>(c.values.size() * sizeof(double)));
  if (!in) throw ConfigError("truncated cost payload: " + path);
  std::ifstream side(path + ".json");
  if (side) {
    nlohmann::json j;
    side >> j;
    c.grid.x0 = j.value("x0", 0.0);
    c.grid.y0 = j.value("y0", 0.0);
  }
  return c;
}

}  // namespace srgeo
